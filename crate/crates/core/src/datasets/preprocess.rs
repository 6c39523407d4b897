use log::warn;

use super::SequenceSample;
use crate::error::{Error, Result};

/// Columns whose mean is already within this fraction of their largest
/// magnitude count as centred and are left untouched.
const CENTRED_TOLERANCE: f64 = 1e-13;

/// Subtracts each feature's mean over the sample's own timesteps.
pub fn normalize_local(sample: &SequenceSample) -> SequenceSample {
    let mut out = sample.clone();
    let (rows, cols) = (out.values.rows(), out.values.cols());
    if rows == 0 {
        return out;
    }
    for c in 0..cols {
        let col = out.values.column(c);
        let mean = col.iter().sum::<f64>() / rows as f64;
        let scale = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if mean.abs() <= CENTRED_TOLERANCE * scale {
            continue;
        }
        for r in 0..rows {
            out.values.set(r, c, col[r] - mean);
        }
    }
    out
}

/// Per-feature affine map learned from training data, `(x - mean) / std`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationRecord {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormalizationRecord {
    pub fn identity(features: usize) -> Self {
        Self {
            mean: vec![0.0; features],
            std: vec![1.0; features],
        }
    }

    pub fn apply(&self, sample: &SequenceSample) -> Result<SequenceSample> {
        if sample.features() != self.mean.len() {
            return Err(Error::dim(self.mean.len(), sample.features(), "normalization features"));
        }
        let mut out = sample.clone();
        for r in 0..out.values.rows() {
            for (c, v) in out.values.row_mut(r).iter_mut().enumerate() {
                *v = (*v - self.mean[c]) / self.std[c];
            }
        }
        Ok(out)
    }

    pub fn apply_all(&self, samples: &[SequenceSample]) -> Result<Vec<SequenceSample>> {
        samples.iter().map(|s| self.apply(s)).collect()
    }

    pub fn invert(&self, sample: &SequenceSample) -> SequenceSample {
        let mut out = sample.clone();
        for r in 0..out.values.rows() {
            for (c, v) in out.values.row_mut(r).iter_mut().enumerate() {
                *v = *v * self.std[c] + self.mean[c];
            }
        }
        out
    }
}

/// Standardises every feature using statistics pooled over all timesteps of
/// all samples, returning the transformed data and the reusable record.
pub fn normalize_global(
    dataset: &[SequenceSample],
) -> Result<(Vec<SequenceSample>, NormalizationRecord)> {
    if dataset.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "global normalization needs at least 2 samples, got {}",
            dataset.len()
        )));
    }
    let d = dataset[0].features();
    let mut count = 0usize;
    let mut sum = vec![0.0; d];
    for s in dataset {
        if s.features() != d {
            return Err(Error::dim(d, s.features(), "sample features"));
        }
        for r in 0..s.values.rows() {
            for (acc, v) in sum.iter_mut().zip(s.values.row(r)) {
                *acc += v;
            }
        }
        count += s.len();
    }
    let mean: Vec<f64> = sum.iter().map(|v| v / count as f64).collect();
    let mut ss = vec![0.0; d];
    for s in dataset {
        for r in 0..s.values.rows() {
            for ((acc, v), m) in ss.iter_mut().zip(s.values.row(r)).zip(&mean) {
                *acc += (v - m) * (v - m);
            }
        }
    }
    let std = ss
        .iter()
        .enumerate()
        .map(|(c, v)| {
            let sd = (v / count as f64).sqrt();
            if sd > 0.0 {
                sd
            } else {
                warn!("feature {c} has zero variance; centring only");
                1.0
            }
        })
        .collect();
    let record = NormalizationRecord { mean, std };
    Ok((record.apply_all(dataset)?, record))
}

/// Same sample with its timesteps in reverse order.
pub fn reverse_sequence(sample: &SequenceSample) -> SequenceSample {
    SequenceSample {
        values: sample.values.reversed_rows(),
        ..sample.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{Matrix, RandomStream};

    fn random_sample(id: usize, len: usize, d: usize, s: &mut RandomStream) -> SequenceSample {
        let v = (0..len * d).map(|_| 3.0 + 2.0 * s.normal()).collect();
        SequenceSample::new(id, Some(0), Matrix::from_vec(len, d, v).unwrap())
    }

    #[test]
    fn local_constant_becomes_zero() {
        let s = SequenceSample::new(0, None, Matrix::from_rows(&vec![vec![4.0, -1.0]; 6]).unwrap());
        let out = normalize_local(&s);
        assert!(out.values.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn local_means_vanish_and_idempotent() {
        let mut st = RandomStream::new(8);
        for _ in 0..50 {
            let s = random_sample(0, 37, 3, &mut st);
            let once = normalize_local(&s);
            for c in 0..3 {
                let m = once.values.column(c).iter().sum::<f64>() / 37.0;
                assert!(m.abs() < 1e-12);
            }
            assert_eq!(normalize_local(&once), once);
        }
    }

    /// Pooled statistics computed with a single flattened pass.
    fn pooled_oracle(data: &[SequenceSample], c: usize) -> (f64, f64) {
        let vals: Vec<f64> = data.iter().flat_map(|s| s.values.column(c)).collect();
        let n = vals.len() as f64;
        let m = vals.iter().sum::<f64>() / n;
        let v = vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
        (m, v.sqrt())
    }

    #[test]
    fn global_standardises_pooled_features() {
        let mut st = RandomStream::new(9);
        let data: Vec<_> = (0..20).map(|i| random_sample(i, 5 + i % 7, 2, &mut st)).collect();
        let (out, rec) = normalize_global(&data).unwrap();
        for c in 0..2 {
            let (m, sd) = pooled_oracle(&out, c);
            assert!(m.abs() < 1e-9 && (sd - 1.0).abs() < 1e-9);
            let (om, osd) = pooled_oracle(&data, c);
            assert!((rec.mean[c] - om).abs() < 1e-12 && (rec.std[c] - osd).abs() < 1e-12);
        }
        let test = random_sample(99, 8, 2, &mut st);
        let applied = rec.apply(&test).unwrap();
        assert_eq!(
            applied.values.get(3, 1),
            (test.values.get(3, 1) - rec.mean[1]) / rec.std[1]
        );
    }

    #[test]
    fn global_zero_variance_feature_is_centred() {
        let a = SequenceSample::new(0, None, Matrix::from_rows(&[vec![2.0, 1.0], vec![2.0, 3.0]]).unwrap());
        let b = SequenceSample::new(1, None, Matrix::from_rows(&[vec![2.0, 5.0]]).unwrap());
        let (out, rec) = normalize_global(&[a, b]).unwrap();
        assert_eq!(rec.std[0], 1.0);
        assert!(out.iter().all(|s| s.values.column(0).iter().all(|v| *v == 0.0)));
        assert!(normalize_global(&out[..1]).is_err());
    }

    #[test]
    fn reverse_properties() {
        let mut st = RandomStream::new(10);
        let s = random_sample(0, 6, 2, &mut st);
        let r = reverse_sequence(&s);
        assert_eq!(r.values.row(0), s.values.row(5));
        assert_eq!(reverse_sequence(&r), s);
        let one = random_sample(1, 1, 3, &mut st);
        assert_eq!(reverse_sequence(&one), one);
    }
}
