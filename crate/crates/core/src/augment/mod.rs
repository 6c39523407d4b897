//! Synthesising new training examples in context-vector space.
//!
//! Three operators are available: Gaussian noise scaled per element by the
//! dataset's context spread, interpolation toward an in-class neighbour, and
//! extrapolation away from it. Neighbour operators pair each sample with up
//! to `k` same-class partners and emit one synthetic context per pair.

mod knn;
mod operators;

use log::warn;
use serde::{Deserialize, Serialize};

pub use knn::{knn_in_class, QuantizedIndex};
pub use operators::{add_noise, extrapolate, interpolate, interpolate_unchecked};

use crate::autoencoder::ContextVector;
use crate::error::{Error, Result};
use crate::tensor::{per_element_std, Matrix, RandomStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    Noise,
    Interpolate,
    Extrapolate,
}

impl std::str::FromStr for Operator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noise" => Ok(Self::Noise),
            "interpolate" | "interpolation" => Ok(Self::Interpolate),
            "extrapolate" | "extrapolation" => Ok(Self::Extrapolate),
            other => Err(Error::Parameter(format!("unknown operator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NeighborPolicy {
    InClassNearest,
    InClassRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NeighborSearch {
    BruteForce,
    Quantized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub operator: Operator,
    pub lambda: f64,
    /// When set, lambda is drawn uniformly from this range for every synthetic.
    pub random_lambda: Option<(f64, f64)>,
    pub gamma: f64,
    pub k: usize,
    pub policy: NeighborPolicy,
    pub search: NeighborSearch,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            operator: Operator::Extrapolate,
            lambda: 0.5,
            random_lambda: None,
            gamma: 0.5,
            k: 10,
            policy: NeighborPolicy::InClassNearest,
            search: NeighborSearch::BruteForce,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        let lambdas = match self.random_lambda {
            Some((lo, hi)) if lo <= hi => vec![lo, hi],
            Some((lo, hi)) => {
                return Err(Error::Parameter(format!("random lambda range [{lo}, {hi}] is empty")))
            }
            None => vec![self.lambda],
        };
        for l in lambdas {
            if !(l >= 0.0) {
                return Err(Error::Parameter(format!("lambda must be non-negative, got {l}")));
            }
            if self.operator == Operator::Interpolate && l > 1.0 {
                return Err(Error::Parameter(format!(
                    "interpolation lambda must lie in [0, 1], got {l}"
                )));
            }
        }
        if !(self.gamma >= 0.0) {
            return Err(Error::Parameter(format!("gamma must be non-negative, got {}", self.gamma)));
        }
        if self.k == 0 {
            return Err(Error::Parameter("K must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sources {
    /// Noise applied to one sample.
    Noise(usize),
    /// `(j, k)`: the sample and its partner.
    Pair(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticContext {
    pub values: ContextVector,
    pub label: usize,
    pub sources: Sources,
    /// Length of the sequence to decode this context into.
    pub target_length: usize,
}

/// Length rule for decoded synthetics: the floor of the parents' mean for
/// interpolation, the first parent's length otherwise.
pub fn target_length(operator: Operator, len_j: usize, len_k: usize) -> usize {
    match operator {
        Operator::Interpolate => (len_j + len_k) / 2,
        Operator::Extrapolate | Operator::Noise => len_j,
    }
}

fn random_partners(
    labels: &[usize],
    query: usize,
    k: usize,
    stream: &mut RandomStream,
) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..labels.len())
        .filter(|&i| i != query && labels[i] == labels[query])
        .collect();
    let take = k.min(pool.len());
    // partial Fisher-Yates: first `take` slots are a uniform sample without replacement
    for i in 0..take {
        let j = i + stream.index(pool.len() - i);
        pool.swap(i, j);
    }
    pool.truncate(take);
    pool
}

/// Expands a labelled set of contexts with synthetic ones.
///
/// Noise yields one synthetic per sample; neighbour operators yield
/// `min(k, class_size - 1)` per sample. Samples in singleton classes are
/// skipped with a warning. Each sample draws from its own child stream, so
/// the output does not depend on processing order.
pub fn augment_dataset(
    contexts: &Matrix,
    labels: &[usize],
    lengths: &[usize],
    config: &AugmentConfig,
    stream: &RandomStream,
) -> Result<Vec<SyntheticContext>> {
    config.validate()?;
    let n = contexts.rows();
    if labels.len() != n {
        return Err(Error::dim(n, labels.len(), "augment labels"));
    }
    if lengths.len() != n {
        return Err(Error::dim(n, lengths.len(), "augment lengths"));
    }
    let row = |i: usize| ContextVector(contexts.row(i).to_vec());
    let mut out = Vec::new();

    if config.operator == Operator::Noise {
        let sigma = per_element_std(contexts)?;
        for i in 0..n {
            let mut s = stream.split(i as u64);
            out.push(SyntheticContext {
                values: add_noise(&row(i), &sigma, config.gamma, &mut s)?,
                label: labels[i],
                sources: Sources::Noise(i),
                target_length: lengths[i],
            });
        }
        return Ok(out);
    }

    let index = match (config.policy, config.search) {
        (NeighborPolicy::InClassNearest, NeighborSearch::Quantized) => Some(QuantizedIndex::build(
            contexts,
            labels,
            &mut stream.split_named("quantizer"),
        )?),
        _ => None,
    };
    for i in 0..n {
        let mut s = stream.split(i as u64);
        let partners = match config.policy {
            NeighborPolicy::InClassNearest => {
                let found = match &index {
                    Some(idx) => idx.knn_in_class(i, config.k),
                    None => knn_in_class(contexts, labels, i, config.k),
                };
                match found {
                    Ok(p) => p,
                    Err(Error::NoNeighbors { index, label }) => {
                        warn!("sample {index} is the only member of class {label}; skipped");
                        continue;
                    }
                    Err(e) => return Err(e),
                }
            }
            NeighborPolicy::InClassRandom => {
                let p = random_partners(labels, i, config.k, &mut s);
                if p.is_empty() {
                    warn!("sample {i} is the only member of class {}; skipped", labels[i]);
                    continue;
                }
                p
            }
        };
        let c_j = row(i);
        for k in partners {
            let lambda = match config.random_lambda {
                Some((lo, hi)) => s.uniform_range(lo, hi),
                None => config.lambda,
            };
            let c_k = row(k);
            let values = match config.operator {
                Operator::Interpolate => interpolate(&c_j, &c_k, lambda)?,
                Operator::Extrapolate => extrapolate(&c_j, &c_k, lambda)?,
                Operator::Noise => unreachable!("handled above"),
            };
            out.push(SyntheticContext {
                values,
                label: labels[i],
                sources: Sources::Pair(i, k),
                target_length: target_length(config.operator, lengths[i], lengths[k]),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(operator: Operator) -> AugmentConfig {
        AugmentConfig {
            operator,
            ..Default::default()
        }
    }

    fn random_contexts(n: usize, d: usize, seed: u64) -> Matrix {
        let mut s = RandomStream::new(seed);
        Matrix::from_vec(n, d, (0..n * d).map(|_| s.normal()).collect()).unwrap()
    }

    #[test]
    fn neighbor_count_capped_by_class_size() {
        let c = random_contexts(5, 3, 1);
        let out = augment_dataset(&c, &[0; 5], &[4; 5], &cfg(Operator::Interpolate), &RandomStream::new(0))
            .unwrap();
        assert_eq!(out.len(), 20);
    }

    #[test]
    fn interpolated_length_is_floor_of_mean() {
        assert_eq!(target_length(Operator::Interpolate, 10, 13), 11);
        assert_eq!(target_length(Operator::Extrapolate, 10, 13), 10);
        let c = random_contexts(2, 2, 2);
        let out = augment_dataset(&c, &[1, 1], &[10, 13], &cfg(Operator::Interpolate), &RandomStream::new(0))
            .unwrap();
        assert!(out.iter().all(|s| s.target_length == 11));
        let out = augment_dataset(&c, &[1, 1], &[10, 13], &cfg(Operator::Extrapolate), &RandomStream::new(0))
            .unwrap();
        assert_eq!(out[0].target_length, 10);
        assert_eq!(out[1].target_length, 13);
    }

    #[test]
    fn counts_labels_and_singletons() {
        let c = random_contexts(12, 4, 3);
        let labels = [0, 0, 0, 1, 1, 2, 0, 0, 1, 1, 1, 0];
        let lengths = [7; 12];
        for policy in [NeighborPolicy::InClassNearest, NeighborPolicy::InClassRandom] {
            let config = AugmentConfig {
                operator: Operator::Extrapolate,
                k: 3,
                policy,
                ..Default::default()
            };
            let out = augment_dataset(&c, &labels, &lengths, &config, &RandomStream::new(4)).unwrap();
            // class 0: 6 members, class 1: 5, class 2: singleton
            assert_eq!(out.len(), 6 * 3 + 5 * 3);
            for s in &out {
                let Sources::Pair(j, k) = s.sources else { panic!() };
                assert_ne!(j, k);
                assert_eq!(s.label, labels[j]);
                assert_eq!(s.label, labels[k]);
            }
        }
        let noise = augment_dataset(&c, &labels, &lengths, &cfg(Operator::Noise), &RandomStream::new(4)).unwrap();
        assert_eq!(noise.len(), 12);
        assert!(noise.iter().enumerate().all(|(i, s)| s.label == labels[i]));
    }

    #[test]
    fn duplicate_parents_still_generate() {
        let c = Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        let out = augment_dataset(&c, &[0, 0], &[3, 3], &cfg(Operator::Extrapolate), &RandomStream::new(0))
            .unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].values.0, vec![1.0, 2.0]);
    }

    #[test]
    fn random_policy_is_seeded() {
        let c = random_contexts(30, 2, 9);
        let labels: Vec<usize> = (0..30).map(|i| i % 2).collect();
        let config = AugmentConfig {
            policy: NeighborPolicy::InClassRandom,
            k: 4,
            ..Default::default()
        };
        let a = augment_dataset(&c, &labels, &[5; 30], &config, &RandomStream::new(1)).unwrap();
        let b = augment_dataset(&c, &labels, &[5; 30], &config, &RandomStream::new(1)).unwrap();
        assert_eq!(a, b);
        for s in &a {
            let Sources::Pair(j, k) = s.sources else { panic!() };
            let partners: Vec<_> = a
                .iter()
                .filter_map(|t| match t.sources {
                    Sources::Pair(jj, kk) if jj == j => Some(kk),
                    _ => None,
                })
                .collect();
            let mut dedup = partners.clone();
            dedup.sort();
            dedup.dedup();
            assert_eq!(dedup.len(), partners.len(), "sampled with replacement");
            assert!(k != j);
        }
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(Operator::Interpolate);
        c.lambda = 1.5;
        assert!(c.validate().is_err());
        c.operator = Operator::Extrapolate;
        assert!(c.validate().is_ok());
        c.k = 0;
        assert!(c.validate().is_err());
        let mut n = cfg(Operator::Noise);
        n.gamma = -1.0;
        assert!(n.validate().is_err());
    }
}
