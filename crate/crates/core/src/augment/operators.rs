use crate::autoencoder::ContextVector;
use crate::error::{Error, Result};
use crate::tensor::RandomStream;

fn check_lengths(a: &[f64], b: &[f64], what: &'static str) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::dim(a.len(), b.len(), what));
    }
    Ok(())
}

/// `c_i + gamma * sigma_i * N(0, 1)` for every element.
pub fn add_noise(
    c: &ContextVector,
    sigma: &[f64],
    gamma: f64,
    stream: &mut RandomStream,
) -> Result<ContextVector> {
    check_lengths(c.as_slice(), sigma, "noise sigma")?;
    if !(gamma >= 0.0) {
        return Err(Error::Parameter(format!("gamma must be non-negative, got {gamma}")));
    }
    Ok(ContextVector(
        c.0.iter()
            .zip(sigma)
            .map(|(v, s)| v + gamma * s * stream.normal())
            .collect(),
    ))
}

/// `(c_k - c_j) * lambda + c_j` with no range check on `lambda`.
///
/// Returns `c_k` exactly at `lambda == 1`.
pub fn interpolate_unchecked(c_j: &[f64], c_k: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_lengths(c_j, c_k, "interpolation parents")?;
    if lambda == 1.0 {
        return Ok(c_k.to_vec());
    }
    Ok(c_j
        .iter()
        .zip(c_k)
        .map(|(j, k)| (k - j) * lambda + j)
        .collect())
}

/// Point between `c_j` (at `lambda = 0`) and `c_k` (at `lambda = 1`).
pub fn interpolate(c_j: &ContextVector, c_k: &ContextVector, lambda: f64) -> Result<ContextVector> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Parameter(format!(
            "interpolation lambda must lie in [0, 1], got {lambda}"
        )));
    }
    interpolate_unchecked(&c_j.0, &c_k.0, lambda).map(ContextVector)
}

/// `(c_j - c_k) * lambda + c_j`: moves `c_j` away from `c_k`.
pub fn extrapolate(c_j: &ContextVector, c_k: &ContextVector, lambda: f64) -> Result<ContextVector> {
    if !(lambda >= 0.0) {
        return Err(Error::Parameter(format!(
            "extrapolation lambda must be non-negative, got {lambda}"
        )));
    }
    check_lengths(&c_j.0, &c_k.0, "extrapolation parents")?;
    Ok(ContextVector(
        c_j.0
            .iter()
            .zip(&c_k.0)
            .map(|(j, k)| (j - k) * lambda + j)
            .collect(),
    ))
}
