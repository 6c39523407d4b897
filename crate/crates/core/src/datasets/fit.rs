//! Least-squares sinusoid fitting, `x(t) ~ A sin(2 pi f t + phi) + offset`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidFit {
    pub amplitude: f64,
    pub frequency: f64,
    /// In `[0, 2 pi)`.
    pub phase: f64,
    pub offset: f64,
    pub rms_residual: f64,
    /// Residual norm divided by the norm of the centred signal.
    pub relative_residual: f64,
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let k = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= k * a[col][c];
            }
            b[row] -= k * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Linear fit of `[sin, cos, 1]` at fixed frequency; returns coefficients and SSE.
fn linear_fit(x: &[f64], f: f64) -> Option<([f64; 3], f64)> {
    let mut ata = vec![vec![0.0; 3]; 3];
    let mut atb = vec![0.0; 3];
    for (t, v) in x.iter().enumerate() {
        let w = 2.0 * PI * f * t as f64;
        let row = [w.sin(), w.cos(), 1.0];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * v;
        }
    }
    let c = solve(ata, atb)?;
    let coef = [c[0], c[1], c[2]];
    Some((coef, sse(x, &coef, f)))
}

fn sse(x: &[f64], c: &[f64; 3], f: f64) -> f64 {
    x.iter()
        .enumerate()
        .map(|(t, v)| {
            let w = 2.0 * PI * f * t as f64;
            let r = c[0] * w.sin() + c[1] * w.cos() + c[2] - v;
            r * r
        })
        .sum()
}

/// Fits a sinusoid with offset to an evenly sampled series.
///
/// A frequency grid with spacing `0.05 / len` cycles per step picks the basin,
/// then Gauss-Newton on `(a, b, offset, f)` polishes it.
pub fn fit_sinusoid(x: &[f64]) -> Result<SinusoidFit> {
    let n = x.len();
    if n < 4 {
        return Err(Error::InsufficientData(format!(
            "sinusoid fit needs at least 4 points, got {n}"
        )));
    }
    let step = 0.05 / n as f64;
    let mut best: Option<([f64; 3], f64, f64)> = None;
    let mut f = step;
    while f <= 0.5 {
        if let Some((c, e)) = linear_fit(x, f) {
            if best.map_or(true, |(_, be, _)| e < be) {
                best = Some((c, e, f));
            }
        }
        f += step;
    }
    let (mut c, mut err, mut f) =
        best.ok_or_else(|| Error::InsufficientData("degenerate series".into()))?;

    for _ in 0..100 {
        let mut jtj = vec![vec![0.0; 4]; 4];
        let mut jtr = vec![0.0; 4];
        for (t, v) in x.iter().enumerate() {
            let tt = t as f64;
            let w = 2.0 * PI * f * tt;
            let (s, co) = w.sin_cos();
            let r = c[0] * s + c[1] * co + c[2] - v;
            let j = [s, co, 1.0, 2.0 * PI * tt * (c[0] * co - c[1] * s)];
            for a in 0..4 {
                for b in 0..4 {
                    jtj[a][b] += j[a] * j[b];
                }
                jtr[a] += j[a] * r;
            }
        }
        let Some(delta) = solve(jtj, jtr) else { break };
        let mut scale = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let cand = [
                c[0] - scale * delta[0],
                c[1] - scale * delta[1],
                c[2] - scale * delta[2],
            ];
            let cf = f - scale * delta[3];
            let e = sse(x, &cand, cf);
            if e < err {
                c = cand;
                f = cf;
                err = e;
                improved = true;
                break;
            }
            scale *= 0.5;
        }
        if !improved {
            break;
        }
    }

    let mean = x.iter().sum::<f64>() / n as f64;
    let centred: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    let (mut amplitude, mut phase) = (c[0].hypot(c[1]), c[1].atan2(c[0]));
    let mut frequency = f;
    if frequency < 0.0 {
        // sin(-w t + p) = sin(w t + pi - p)
        frequency = -frequency;
        phase = PI - phase;
    }
    if amplitude == 0.0 {
        phase = 0.0;
        amplitude = 0.0;
    }
    Ok(SinusoidFit {
        amplitude,
        frequency,
        phase: phase.rem_euclid(2.0 * PI),
        offset: c[2],
        rms_residual: (err / n as f64).sqrt(),
        relative_residual: if centred > 0.0 {
            (err / centred).sqrt()
        } else {
            0.0
        },
    })
}
