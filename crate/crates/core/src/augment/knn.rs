//! Exact in-class nearest-neighbour search.
//!
//! Distances are Euclidean; ties are broken by ascending index. The
//! quantized index prunes candidates with the triangle-inequality bound
//! `|d(q, c) - d(x, c)| <= d(q, x)` against a coarse k-means centroid `c`
//! of each point, and scores every surviving candidate with the same distance
//! routine as the brute-force scan, so both paths return identical lists.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::tensor::{squared_distance, Matrix, RandomStream};

fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

fn check_inputs(contexts: &Matrix, labels: &[usize], query: usize, k: usize) -> Result<()> {
    if labels.len() != contexts.rows() {
        return Err(Error::dim(contexts.rows(), labels.len(), "knn labels"));
    }
    if query >= labels.len() {
        return Err(Error::Parameter(format!(
            "query index {query} out of range for {} samples",
            labels.len()
        )));
    }
    if k == 0 {
        return Err(Error::Parameter("K must be at least 1".into()));
    }
    Ok(())
}

/// The `k` nearest samples sharing the query's label, excluding the query.
///
/// Returns fewer than `k` indices when the class is smaller than `k + 1`.
pub fn knn_in_class(contexts: &Matrix, labels: &[usize], query: usize, k: usize) -> Result<Vec<usize>> {
    check_inputs(contexts, labels, query, k)?;
    let label = labels[query];
    let q = contexts.row(query);
    let mut cands: Vec<(f64, usize)> = labels
        .iter()
        .enumerate()
        .filter(|&(i, &l)| l == label && i != query)
        .map(|(i, _)| (distance(q, contexts.row(i)), i))
        .collect();
    if cands.is_empty() {
        return Err(Error::NoNeighbors { index: query, label });
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    cands.truncate(k);
    Ok(cands.into_iter().map(|(_, i)| i).collect())
}

struct ClassPartition {
    members: Vec<usize>,
    centroids: Vec<Vec<f64>>,
    /// Per member: (assigned centroid, distance to it).
    assignment: Vec<(usize, f64)>,
}

/// Coarse-quantization accelerator for repeated in-class queries.
pub struct QuantizedIndex<'a> {
    contexts: &'a Matrix,
    labels: &'a [usize],
    classes: BTreeMap<usize, ClassPartition>,
}

const LLOYD_ITERATIONS: usize = 8;

impl<'a> QuantizedIndex<'a> {
    pub fn build(contexts: &'a Matrix, labels: &'a [usize], stream: &mut RandomStream) -> Result<Self> {
        if labels.len() != contexts.rows() {
            return Err(Error::dim(contexts.rows(), labels.len(), "knn labels"));
        }
        let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &l) in labels.iter().enumerate() {
            by_class.entry(l).or_default().push(i);
        }
        let mut classes = BTreeMap::new();
        for (label, members) in by_class {
            let k = ((members.len() as f64).sqrt().ceil() as usize).max(1);
            let mut order = members.clone();
            stream.shuffle(&mut order);
            let mut centroids: Vec<Vec<f64>> =
                order[..k].iter().map(|&i| contexts.row(i).to_vec()).collect();
            let mut assign = vec![0usize; members.len()];
            for _ in 0..LLOYD_ITERATIONS {
                for (a, &m) in assign.iter_mut().zip(&members) {
                    let x = contexts.row(m);
                    *a = (0..k)
                        .min_by(|&p, &q| {
                            squared_distance(x, &centroids[p])
                                .total_cmp(&squared_distance(x, &centroids[q]))
                        })
                        .unwrap_or(0);
                }
                let d = contexts.cols();
                let mut sums = vec![vec![0.0; d]; k];
                let mut counts = vec![0usize; k];
                for (&a, &m) in assign.iter().zip(&members) {
                    counts[a] += 1;
                    for (s, v) in sums[a].iter_mut().zip(contexts.row(m)) {
                        *s += v;
                    }
                }
                for c in 0..k {
                    if counts[c] > 0 {
                        centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
                    }
                }
            }
            let assignment = assign
                .iter()
                .zip(&members)
                .map(|(&a, &m)| (a, distance(contexts.row(m), &centroids[a])))
                .collect();
            classes.insert(
                label,
                ClassPartition {
                    members,
                    centroids,
                    assignment,
                },
            );
        }
        Ok(Self {
            contexts,
            labels,
            classes,
        })
    }

    pub fn knn_in_class(&self, query: usize, k: usize) -> Result<Vec<usize>> {
        check_inputs(self.contexts, self.labels, query, k)?;
        let label = self.labels[query];
        let part = &self.classes[&label];
        if part.members.len() < 2 {
            return Err(Error::NoNeighbors { index: query, label });
        }
        let q = self.contexts.row(query);
        let to_centroid: Vec<f64> = part.centroids.iter().map(|c| distance(q, c)).collect();
        let mut bounds: Vec<(f64, f64, usize)> = part
            .members
            .iter()
            .zip(&part.assignment)
            .filter(|(&m, _)| m != query)
            .map(|(&m, &(c, r))| ((to_centroid[c] - r).abs(), to_centroid[c] + r, m))
            .collect();
        bounds.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));

        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        for (lb, scale, m) in bounds {
            if best.len() == k {
                let kth = best[k - 1].0;
                let slack = 1e-10 * (scale + kth) + f64::MIN_POSITIVE;
                if lb > kth + slack {
                    break;
                }
            }
            let d = distance(q, self.contexts.row(m));
            let pos = best.partition_point(|&(bd, bi)| bd < d || (bd == d && bi < m));
            if pos < k {
                best.insert(pos, (d, m));
                best.truncate(k);
            }
        }
        Ok(best.into_iter().map(|(_, i)| i).collect())
    }
}
