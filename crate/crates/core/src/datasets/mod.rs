//! Sequence samples, synthetic generators, preprocessing and CSV ingestion.

mod csv_io;
mod fit;
mod preprocess;
mod synth;

use std::collections::BTreeMap;

pub use csv_io::{load_csv_sequences, write_csv_sequences, CsvSchema};
pub use fit::{fit_sinusoid, SinusoidFit};
pub use preprocess::{normalize_global, normalize_local, reverse_sequence, NormalizationRecord};
pub use synth::{
    gen_boundary_dataset, gen_sinusoids, BoundaryKind, BoundarySpec, LabeledPoints, SinusoidSpec,
};

use crate::tensor::Matrix;

/// A real-valued time series (`time x features`) with an optional class label.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSample {
    pub id: usize,
    pub label: Option<usize>,
    pub values: Matrix,
}

impl SequenceSample {
    pub fn new(id: usize, label: Option<usize>, values: Matrix) -> Self {
        Self { id, label, values }
    }

    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    pub fn features(&self) -> usize {
        self.values.cols()
    }
}

/// Groups indices by sequence length, shortest length first; indices keep
/// their original relative order inside a bucket.
pub fn length_buckets(lengths: impl IntoIterator<Item = usize>) -> Vec<(usize, Vec<usize>)> {
    let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, len) in lengths.into_iter().enumerate() {
        buckets.entry(len).or_default().push(i);
    }
    buckets.into_iter().collect()
}

/// Wraps 2-D points as length-1 sequences so static data runs through the
/// same autoencoder pipeline.
pub fn points_as_sequences(points: &LabeledPoints) -> Vec<SequenceSample> {
    points
        .points
        .iter()
        .zip(&points.labels)
        .enumerate()
        .map(|(i, (p, &y))| {
            SequenceSample::new(i, Some(y), Matrix::from_vec(1, p.len(), p.clone()).expect("shape"))
        })
        .collect()
}
