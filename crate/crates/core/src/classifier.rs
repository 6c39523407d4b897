//! Two-hidden-layer ReLU MLP with dropout, trained with softmax cross-entropy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{adam_step, AdamState, ParamSet, UpdateBudget};
use crate::tensor::{gemm, mean, sample_std, Matrix, Op, RandomStream};

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub w3: Matrix,
    pub b3: Vec<f64>,
    pub dropout: f64,
}

pub const DEFAULT_MLP_DROPOUT: f64 = 0.5;

fn glorot(rows: usize, cols: usize, stream: &mut RandomStream) -> Matrix {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let mut m = Matrix::zeros(rows, cols);
    for v in m.as_mut_slice() {
        *v = stream.uniform_range(-limit, limit);
    }
    m
}

struct Trace {
    z1: Matrix,
    a1: Matrix,
    m1: Option<Matrix>,
    z2: Matrix,
    a2: Matrix,
    m2: Option<Matrix>,
    probs: Matrix,
}

fn affine(x: &Matrix, w: &Matrix, b: &[f64]) -> Matrix {
    let mut z = Matrix::zeros(x.rows(), w.cols());
    for r in 0..x.rows() {
        z.row_mut(r).copy_from_slice(b);
    }
    gemm(1.0, x, Op::N, w, Op::N, 1.0, &mut z);
    z
}

fn relu_dropout(z: &Matrix, p: f64, stream: Option<&mut RandomStream>) -> (Matrix, Option<Matrix>) {
    let mut a = z.clone();
    a.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
    let mask = match stream {
        Some(s) if p > 0.0 => {
            let keep = 1.0 / (1.0 - p);
            let mut m = Matrix::zeros(z.rows(), z.cols());
            for v in m.as_mut_slice() {
                *v = if s.uniform() < p { 0.0 } else { keep };
            }
            for (x, k) in a.as_mut_slice().iter_mut().zip(m.as_slice()) {
                *x *= k;
            }
            Some(m)
        }
        _ => None,
    };
    (a, mask)
}

/// Row-wise log-softmax, shifted by the row maximum.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
    logits.iter().map(|v| v - lse).collect()
}

impl MlpModel {
    pub fn new(inputs: usize, hidden: usize, classes: usize, stream: &mut RandomStream) -> Self {
        Self {
            w1: glorot(inputs, hidden, stream),
            b1: vec![0.0; hidden],
            w2: glorot(hidden, hidden, stream),
            b2: vec![0.0; hidden],
            w3: glorot(hidden, classes, stream),
            b3: vec![0.0; classes],
            dropout: DEFAULT_MLP_DROPOUT,
        }
    }

    pub fn zeros(inputs: usize, hidden: usize, classes: usize) -> Self {
        Self {
            w1: Matrix::zeros(inputs, hidden),
            b1: vec![0.0; hidden],
            w2: Matrix::zeros(hidden, hidden),
            b2: vec![0.0; hidden],
            w3: Matrix::zeros(hidden, classes),
            b3: vec![0.0; classes],
            dropout: DEFAULT_MLP_DROPOUT,
        }
    }

    pub fn inputs(&self) -> usize {
        self.w1.rows()
    }

    pub fn classes(&self) -> usize {
        self.w3.cols()
    }

    fn zeros_like(&self) -> Self {
        let mut z = Self::zeros(self.inputs(), self.w1.cols(), self.classes());
        z.dropout = self.dropout;
        z
    }

    fn forward(&self, x: &Matrix, mut stream: Option<&mut RandomStream>) -> Trace {
        let z1 = affine(x, &self.w1, &self.b1);
        let (a1, m1) = relu_dropout(&z1, self.dropout, stream.as_deref_mut());
        let z2 = affine(&a1, &self.w2, &self.b2);
        let (a2, m2) = relu_dropout(&z2, self.dropout, stream);
        let mut probs = affine(&a2, &self.w3, &self.b3);
        for r in 0..probs.rows() {
            let ls = log_softmax(probs.row(r));
            for (p, l) in probs.row_mut(r).iter_mut().zip(ls) {
                *p = l.exp();
            }
        }
        Trace {
            z1,
            a1,
            m1,
            z2,
            a2,
            m2,
            probs,
        }
    }

    /// Class probabilities for each row of `x`. A stream turns on dropout.
    pub fn predict_proba(&self, x: &Matrix, stream: Option<&mut RandomStream>) -> Result<Matrix> {
        if x.cols() != self.inputs() {
            return Err(Error::dim(self.inputs(), x.cols(), "mlp input"));
        }
        Ok(self.forward(x, stream).probs)
    }

    /// Mean cross-entropy over the batch and its gradient.
    pub fn loss_and_gradient(
        &self,
        x: &Matrix,
        labels: &[usize],
        stream: Option<&mut RandomStream>,
    ) -> Result<(f64, MlpModel)> {
        if x.cols() != self.inputs() {
            return Err(Error::dim(self.inputs(), x.cols(), "mlp input"));
        }
        if labels.len() != x.rows() {
            return Err(Error::dim(x.rows(), labels.len(), "mlp labels"));
        }
        let b = x.rows();
        let tr = self.forward(x, stream);
        let mut loss = 0.0;
        let mut d = tr.probs.clone();
        for (r, &y) in labels.iter().enumerate() {
            if y >= self.classes() {
                return Err(Error::Parameter(format!("label {y} exceeds class count")));
            }
            loss -= tr.probs.get(r, y).max(f64::MIN_POSITIVE).ln();
            d.row_mut(r)[y] -= 1.0;
        }
        d.as_mut_slice().iter_mut().for_each(|v| *v /= b as f64);

        let mut g = self.zeros_like();
        gemm(1.0, &tr.a2, Op::T, &d, Op::N, 0.0, &mut g.w3);
        col_sums(&d, &mut g.b3);
        let mut da2 = Matrix::zeros(b, self.w2.cols());
        gemm(1.0, &d, Op::N, &self.w3, Op::T, 0.0, &mut da2);
        let dz2 = relu_back(&da2, &tr.z2, tr.m2.as_ref());
        gemm(1.0, &tr.a1, Op::T, &dz2, Op::N, 0.0, &mut g.w2);
        col_sums(&dz2, &mut g.b2);
        let mut da1 = Matrix::zeros(b, self.w1.cols());
        gemm(1.0, &dz2, Op::N, &self.w2, Op::T, 0.0, &mut da1);
        let dz1 = relu_back(&da1, &tr.z1, tr.m1.as_ref());
        gemm(1.0, x, Op::T, &dz1, Op::N, 0.0, &mut g.w1);
        col_sums(&dz1, &mut g.b1);
        Ok((loss / b as f64, g))
    }
}

fn col_sums(m: &Matrix, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for r in 0..m.rows() {
        for (o, v) in out.iter_mut().zip(m.row(r)) {
            *o += v;
        }
    }
}

fn relu_back(da: &Matrix, z: &Matrix, mask: Option<&Matrix>) -> Matrix {
    let mut dz = da.clone();
    for (i, v) in dz.as_mut_slice().iter_mut().enumerate() {
        let gate = if z.as_slice()[i] > 0.0 { 1.0 } else { 0.0 };
        let keep = mask.map_or(1.0, |m| m.as_slice()[i]);
        *v *= gate * keep;
    }
    dz
}

impl ParamSet for MlpModel {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![
            self.w1.as_slice(),
            &self.b1,
            self.w2.as_slice(),
            &self.b2,
            self.w3.as_slice(),
            &self.b3,
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.w1.as_mut_slice(),
            &mut self.b1,
            self.w2.as_mut_slice(),
            &mut self.b2,
            self.w3.as_mut_slice(),
            &mut self.b3,
        ]
    }
}

/// Class probabilities for one input vector.
pub fn mlp_forward(model: &MlpModel, x: &[f64], stream: Option<&mut RandomStream>) -> Result<Vec<f64>> {
    let m = Matrix::from_vec(1, x.len(), x.to_vec())?;
    Ok(model.predict_proba(&m, stream)?.into_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub hidden: usize,
    pub dropout: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub updates: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            hidden: 256,
            dropout: DEFAULT_MLP_DROPOUT,
            batch_size: 32,
            learning_rate: 0.001,
            updates: 2000,
        }
    }
}

/// Minibatch Adam on cross-entropy for exactly `budget` updates.
///
/// Returns the trained model and the number of updates performed.
pub fn train_classifier(
    mut model: MlpModel,
    features: &Matrix,
    labels: &[usize],
    budget: UpdateBudget,
    config: &ClassifierConfig,
    stream: &mut RandomStream,
) -> Result<(MlpModel, u64)> {
    let n = features.rows();
    if n == 0 || labels.len() != n {
        return Err(Error::InsufficientData(format!(
            "classifier needs aligned non-empty data ({n} rows, {} labels)",
            labels.len()
        )));
    }
    let mut distinct = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::InsufficientData("classifier needs at least 2 classes".into()));
    }
    let mut adam = AdamState::new(&model, config.learning_rate);
    let mut order_stream = stream.split_named("order");
    let mut dropout_stream = stream.split_named("dropout");
    let bs = config.batch_size.max(1);
    let d = features.cols();
    let mut updates = 0u64;
    'outer: loop {
        let mut order: Vec<usize> = (0..n).collect();
        order_stream.shuffle(&mut order);
        for chunk in order.chunks(bs) {
            if updates == budget.total() {
                break 'outer;
            }
            let mut x = Matrix::zeros(chunk.len(), d);
            let mut y = Vec::with_capacity(chunk.len());
            for (r, &i) in chunk.iter().enumerate() {
                x.row_mut(r).copy_from_slice(features.row(i));
                y.push(labels[i]);
            }
            let (_, g) = model.loss_and_gradient(&x, &y, Some(&mut dropout_stream))?;
            adam_step(&mut model, &g, &mut adam)?;
            updates += 1;
        }
    }
    Ok((model, updates))
}

/// Argmax prediction per row; ties go to the lowest class index.
pub fn predict(model: &MlpModel, features: &Matrix) -> Result<Vec<usize>> {
    let p = model.predict_proba(features, None)?;
    Ok((0..p.rows())
        .map(|r| {
            let row = p.row(r);
            let mut best = 0;
            for (c, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect())
}

/// Percentage of misclassified rows.
pub fn evaluate(model: &MlpModel, features: &Matrix, labels: &[usize]) -> Result<f64> {
    if features.rows() == 0 {
        return Err(Error::InsufficientData("empty test set".into()));
    }
    if labels.len() != features.rows() {
        return Err(Error::dim(features.rows(), labels.len(), "test labels"));
    }
    let pred = predict(model, features)?;
    Ok(error_rate(&pred, labels))
}

pub fn error_rate(predicted: &[usize], labels: &[usize]) -> f64 {
    let wrong = predicted.iter().zip(labels).filter(|(p, y)| p != y).count();
    100.0 * wrong as f64 / labels.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub errors: Vec<f64>,
    pub mean: f64,
    /// Sample (n - 1) standard deviation.
    pub std: f64,
}

impl EvalResult {
    pub fn from_errors(errors: Vec<f64>) -> Result<Self> {
        if errors.iter().any(|e| !(0.0..=100.0).contains(e)) {
            return Err(Error::Parameter("error rates must lie in [0, 100]".into()));
        }
        Ok(Self {
            mean: mean(&errors),
            std: sample_std(&errors),
            errors,
        })
    }

    pub fn runs(&self) -> usize {
        self.errors.len()
    }
}

/// Runs `protocol` once per seed and aggregates the error rates.
pub fn repeated_eval<F>(seeds: &[u64], mut protocol: F) -> Result<EvalResult>
where
    F: FnMut(usize, u64) -> Result<f64>,
{
    if seeds.len() < 2 {
        return Err(Error::Parameter(format!(
            "repeated evaluation needs at least 2 runs, got {}",
            seeds.len()
        )));
    }
    let errors = seeds
        .iter()
        .enumerate()
        .map(|(run, &seed)| protocol(run, seed))
        .collect::<Result<Vec<_>>>()?;
    EvalResult::from_errors(errors)
}

/// Class-stratified assignment of sample indices to `k` folds.
///
/// Each fold lists its test indices in ascending order; folds are disjoint
/// and together cover every sample once.
pub fn stratified_folds(labels: &[usize], k: usize, stream: &mut RandomStream) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > labels.len() {
        return Err(Error::Parameter(format!(
            "fold count {k} invalid for {} samples",
            labels.len()
        )));
    }
    let mut by_class: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut folds = vec![Vec::new(); k];
    let mut next = 0usize;
    for (_, mut members) in by_class {
        stream.shuffle(&mut members);
        for m in members {
            folds[next % k].push(m);
            next += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}
