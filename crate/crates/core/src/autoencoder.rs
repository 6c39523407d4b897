//! Two-layer LSTM sequence autoencoder whose decoder sees the context vector
//! at every step.
//!
//! Encoder: two stacked LSTM layers run over the (optionally reversed) input;
//! the top layer's final hidden state is the context vector.
//!
//! Decoder: both layers start with hidden state = context and zero cell
//! state. The bottom layer's input at step `t` is `[y_{t-1}, context]` with
//! `y_{-1} = 0`, and `y_t` is a linear read-out of the top hidden state. The
//! decoder always consumes its own previous output, in training as well as
//! generation.
//!
//! Dropout (inverted) sits between the stacked layers and, when
//! `context_dropout` is set, on the context vector itself. Recurrent
//! connections are never dropped.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lstm::{LstmLayer, StepCache};
use crate::optim::ParamSet;
use crate::tensor::{gemm, Matrix, Op, RandomStream};

/// Sequences per gradient chunk. Fixed so accumulation order never depends on
/// the number of worker threads.
pub const GRADIENT_CHUNK: usize = 8;

pub const INIT_SCALE: f64 = 0.08;

/// Fixed-length summary of a sequence produced by the encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextVector(pub Vec<f64>);

impl ContextVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Forward mode. Dropout masks are only drawn in `Train`.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut RandomStream),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderModel {
    pub feature_dim: usize,
    pub hidden: usize,
    pub encoder: [LstmLayer; 2],
    pub decoder: [LstmLayer; 2],
    /// `hidden x feature_dim` read-out from the top decoder layer.
    pub w_out: Matrix,
    pub b_out: Vec<f64>,
    pub dropout: f64,
    pub context_dropout: bool,
    pub reverse_input: bool,
}

struct StackStep {
    bottom: StepCache,
    mask: Option<Matrix>,
    top: StepCache,
}

struct EncoderTrace {
    steps: Vec<StackStep>,
    context_mask: Option<Matrix>,
    context: Matrix,
}

struct DecoderTrace {
    steps: Vec<StackStep>,
    outputs: Vec<Matrix>,
}

fn dropout_mask(rows: usize, cols: usize, p: f64, stream: &mut RandomStream) -> Matrix {
    let keep = 1.0 / (1.0 - p);
    let mut m = Matrix::zeros(rows, cols);
    for v in m.as_mut_slice() {
        *v = if stream.uniform() < p { 0.0 } else { keep };
    }
    m
}

fn hadamard(a: &Matrix, mask: Option<&Matrix>) -> Matrix {
    match mask {
        None => a.clone(),
        Some(m) => {
            let mut out = a.clone();
            for (o, k) in out.as_mut_slice().iter_mut().zip(m.as_slice()) {
                *o *= k;
            }
            out
        }
    }
}

fn add_into(acc: &mut Matrix, other: &Matrix) {
    for (a, b) in acc.as_mut_slice().iter_mut().zip(other.as_slice()) {
        *a += b;
    }
}

impl AutoencoderModel {
    /// Freshly initialised model: uniform weights in `[-0.08, 0.08]`, forget bias 1.
    pub fn new(feature_dim: usize, hidden: usize, stream: &mut RandomStream) -> Self {
        let enc0 = LstmLayer::init_uniform(feature_dim, hidden, INIT_SCALE, stream);
        let enc1 = LstmLayer::init_uniform(hidden, hidden, INIT_SCALE, stream);
        let dec0 = LstmLayer::init_uniform(feature_dim + hidden, hidden, INIT_SCALE, stream);
        let dec1 = LstmLayer::init_uniform(hidden, hidden, INIT_SCALE, stream);
        let mut w_out = Matrix::zeros(hidden, feature_dim);
        for w in w_out.as_mut_slice() {
            *w = stream.uniform_range(-INIT_SCALE, INIT_SCALE);
        }
        Self {
            feature_dim,
            hidden,
            encoder: [enc0, enc1],
            decoder: [dec0, dec1],
            w_out,
            b_out: vec![0.0; feature_dim],
            dropout: 0.2,
            context_dropout: true,
            reverse_input: true,
        }
    }

    /// Every parameter zero; dropout settings as in `new`.
    pub fn zeros(feature_dim: usize, hidden: usize) -> Self {
        Self {
            feature_dim,
            hidden,
            encoder: [
                LstmLayer::zeros(feature_dim, hidden),
                LstmLayer::zeros(hidden, hidden),
            ],
            decoder: [
                LstmLayer::zeros(feature_dim + hidden, hidden),
                LstmLayer::zeros(hidden, hidden),
            ],
            w_out: Matrix::zeros(hidden, feature_dim),
            b_out: vec![0.0; feature_dim],
            dropout: 0.2,
            context_dropout: true,
            reverse_input: true,
        }
    }

    /// Zero-valued copy, used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        let mut z = Self::zeros(self.feature_dim, self.hidden);
        z.dropout = self.dropout;
        z.context_dropout = self.context_dropout;
        z.reverse_input = self.reverse_input;
        z
    }

    fn check_batch(&self, batch: &[&Matrix]) -> Result<usize> {
        let first = batch.first().ok_or(Error::EmptyInput("empty batch"))?;
        let len = first.rows();
        if len == 0 {
            return Err(Error::EmptyInput("sequence has no timesteps"));
        }
        for s in batch {
            if s.cols() != self.feature_dim {
                return Err(Error::dim(self.feature_dim, s.cols(), "sequence features"));
            }
            if s.rows() != len {
                return Err(Error::dim(len, s.rows(), "batch sequence length"));
            }
        }
        Ok(len)
    }

    fn mask(&self, rows: usize, mode: &mut Mode<'_>) -> Option<Matrix> {
        match mode {
            Mode::Train(stream) if self.dropout > 0.0 => {
                Some(dropout_mask(rows, self.hidden, self.dropout, stream))
            }
            _ => None,
        }
    }

    fn run_encoder(&self, batch: &[&Matrix], len: usize, mode: &mut Mode<'_>) -> EncoderTrace {
        let b = batch.len();
        let f = self.feature_dim;
        let mut h0 = Matrix::zeros(b, self.hidden);
        let mut c0 = Matrix::zeros(b, self.hidden);
        let mut h1 = Matrix::zeros(b, self.hidden);
        let mut c1 = Matrix::zeros(b, self.hidden);
        let mut steps = Vec::with_capacity(len);
        for t in 0..len {
            let src = if self.reverse_input { len - 1 - t } else { t };
            let mut x = Matrix::zeros(b, f);
            for (r, s) in batch.iter().enumerate() {
                x.row_mut(r).copy_from_slice(s.row(src));
            }
            let bottom = self.encoder[0].step(&x, &h0, &c0);
            let mask = self.mask(b, mode);
            let top_in = hadamard(&bottom.hidden, mask.as_ref());
            let top = self.encoder[1].step(&top_in, &h1, &c1);
            h0 = bottom.hidden.clone();
            c0 = bottom.cell.clone();
            h1 = top.hidden.clone();
            c1 = top.cell.clone();
            steps.push(StackStep { bottom, mask, top });
        }
        let context_mask = if self.context_dropout {
            self.mask(b, mode)
        } else {
            None
        };
        let context = hadamard(&h1, context_mask.as_ref());
        EncoderTrace {
            steps,
            context_mask,
            context,
        }
    }

    fn run_decoder(&self, context: &Matrix, len: usize, mode: &mut Mode<'_>) -> DecoderTrace {
        let b = context.rows();
        let (f, hd) = (self.feature_dim, self.hidden);
        let mut h0 = context.clone();
        let mut c0 = Matrix::zeros(b, hd);
        let mut h1 = context.clone();
        let mut c1 = Matrix::zeros(b, hd);
        let mut y_prev = Matrix::zeros(b, f);
        let mut steps = Vec::with_capacity(len);
        let mut outputs = Vec::with_capacity(len);
        for _ in 0..len {
            let mut x = Matrix::zeros(b, f + hd);
            for r in 0..b {
                let row = x.row_mut(r);
                row[..f].copy_from_slice(y_prev.row(r));
                row[f..].copy_from_slice(context.row(r));
            }
            let bottom = self.decoder[0].step(&x, &h0, &c0);
            let mask = self.mask(b, mode);
            let top_in = hadamard(&bottom.hidden, mask.as_ref());
            let top = self.decoder[1].step(&top_in, &h1, &c1);
            let mut y = Matrix::zeros(b, f);
            for r in 0..b {
                y.row_mut(r).copy_from_slice(&self.b_out);
            }
            gemm(1.0, &top.hidden, Op::N, &self.w_out, Op::N, 1.0, &mut y);
            h0 = bottom.hidden.clone();
            c0 = bottom.cell.clone();
            h1 = top.hidden.clone();
            c1 = top.cell.clone();
            steps.push(StackStep { bottom, mask, top });
            outputs.push(y.clone());
            y_prev = y;
        }
        DecoderTrace { steps, outputs }
    }

    /// Context vectors for a batch of equally long sequences, one row each.
    pub fn encode_batch(&self, batch: &[&Matrix], mut mode: Mode<'_>) -> Result<Matrix> {
        let len = self.check_batch(batch)?;
        Ok(self.run_encoder(batch, len, &mut mode).context)
    }

    pub fn encode(&self, sequence: &Matrix, mode: Mode<'_>) -> Result<ContextVector> {
        let ctx = self.encode_batch(&[sequence], mode)?;
        Ok(ContextVector(ctx.into_vec()))
    }

    /// Eval-mode contexts for sequences of arbitrary, mixed lengths.
    ///
    /// Sequences are grouped by length internally; rows come back in input order.
    pub fn encode_all(&self, sequences: &[&Matrix]) -> Result<Matrix> {
        let mut out = Matrix::zeros(sequences.len(), self.hidden);
        for (_, idx) in crate::datasets::length_buckets(sequences.iter().map(|s| s.rows())) {
            let batch: Vec<&Matrix> = idx.iter().map(|&i| sequences[i]).collect();
            let ctx = self.encode_batch(&batch, Mode::Eval)?;
            for (r, &i) in idx.iter().enumerate() {
                out.row_mut(i).copy_from_slice(ctx.row(r));
            }
        }
        Ok(out)
    }

    /// Decodes each context row into a `length x feature_dim` sequence.
    pub fn decode_batch(
        &self,
        contexts: &Matrix,
        length: usize,
        mut mode: Mode<'_>,
    ) -> Result<Vec<Matrix>> {
        if length == 0 {
            return Err(Error::InvalidLength("decode length must be at least 1".into()));
        }
        if contexts.cols() != self.hidden {
            return Err(Error::dim(self.hidden, contexts.cols(), "context length"));
        }
        let trace = self.run_decoder(contexts, length, &mut mode);
        let b = contexts.rows();
        let mut out = vec![Matrix::zeros(length, self.feature_dim); b];
        for (t, y) in trace.outputs.iter().enumerate() {
            for (r, seq) in out.iter_mut().enumerate() {
                seq.row_mut(t).copy_from_slice(y.row(r));
            }
        }
        Ok(out)
    }

    pub fn decode(&self, context: &ContextVector, length: usize, mode: Mode<'_>) -> Result<Matrix> {
        let ctx = Matrix::from_vec(1, context.len(), context.0.clone())
            .map_err(|_| Error::dim(self.hidden, context.len(), "context length"))?;
        Ok(self.decode_batch(&ctx, length, mode)?.remove(0))
    }

    /// Encode then decode at the input's own length (eval mode).
    pub fn reconstruct(&self, sequence: &Matrix) -> Result<Matrix> {
        let c = self.encode(sequence, Mode::Eval)?;
        self.decode(&c, sequence.rows(), Mode::Eval)
    }

    /// Sum over the batch of per-sequence reconstruction MSE, with gradients of
    /// `scale * sum` accumulated into `grad`.
    fn chunk_gradient(
        &self,
        batch: &[&Matrix],
        len: usize,
        mut mode: Mode<'_>,
        scale: f64,
        grad: &mut AutoencoderModel,
    ) -> f64 {
        let b = batch.len();
        let (f, hd) = (self.feature_dim, self.hidden);
        let enc = self.run_encoder(batch, len, &mut mode);
        let dec = self.run_decoder(&enc.context, len, &mut mode);

        let norm = (len * f) as f64;
        let mut loss = 0.0;
        let mut d_out = Vec::with_capacity(len);
        for (t, y) in dec.outputs.iter().enumerate() {
            let mut dy = Matrix::zeros(b, f);
            for (r, s) in batch.iter().enumerate() {
                let target = s.row(t);
                let pred = y.row(r);
                let dr = dy.row_mut(r);
                for j in 0..f {
                    let e = pred[j] - target[j];
                    loss += e * e / norm;
                    dr[j] = scale * 2.0 * e / norm;
                }
            }
            d_out.push(dy);
        }

        // decoder, newest step first
        let mut d_context = Matrix::zeros(b, hd);
        let mut dh0 = Matrix::zeros(b, hd);
        let mut dc0 = Matrix::zeros(b, hd);
        let mut dh1 = Matrix::zeros(b, hd);
        let mut dc1 = Matrix::zeros(b, hd);
        let mut dy_carry = Matrix::zeros(b, f);
        for t in (0..len).rev() {
            let step = &dec.steps[t];
            let mut dy = d_out[t].clone();
            add_into(&mut dy, &dy_carry);
            gemm(1.0, &step.top.hidden, Op::T, &dy, Op::N, 1.0, &mut grad.w_out);
            for r in 0..b {
                for (g, d) in grad.b_out.iter_mut().zip(dy.row(r)) {
                    *g += d;
                }
            }
            let mut dh_top = dh1;
            gemm(1.0, &dy, Op::N, &self.w_out, Op::T, 1.0, &mut dh_top);
            let (dx_top, dh1_prev, dc1_prev) =
                self.decoder[1].step_backward(&step.top, &dh_top, &dc1, &mut grad.decoder[1], true);
            let mut dh_bottom = hadamard(&dx_top.expect("requested"), step.mask.as_ref());
            add_into(&mut dh_bottom, &dh0);
            let (dx_bottom, dh0_prev, dc0_prev) = self.decoder[0].step_backward(
                &step.bottom,
                &dh_bottom,
                &dc0,
                &mut grad.decoder[0],
                true,
            );
            let dx_bottom = dx_bottom.expect("requested");
            for r in 0..b {
                let row = dx_bottom.row(r);
                dy_carry.row_mut(r).copy_from_slice(&row[..f]);
                for (c, d) in d_context.row_mut(r).iter_mut().zip(&row[f..]) {
                    *c += d;
                }
            }
            dh0 = dh0_prev;
            dc0 = dc0_prev;
            dh1 = dh1_prev;
            dc1 = dc1_prev;
        }
        // both decoder layers were seeded with the context
        add_into(&mut d_context, &dh0);
        add_into(&mut d_context, &dh1);

        // encoder
        let d_top_final = hadamard(&d_context, enc.context_mask.as_ref());
        let mut dh0 = Matrix::zeros(b, hd);
        let mut dc0 = Matrix::zeros(b, hd);
        let mut dh1 = d_top_final;
        let mut dc1 = Matrix::zeros(b, hd);
        for t in (0..len).rev() {
            let step = &enc.steps[t];
            let (dx_top, dh1_prev, dc1_prev) =
                self.encoder[1].step_backward(&step.top, &dh1, &dc1, &mut grad.encoder[1], true);
            let mut dh_bottom = hadamard(&dx_top.expect("requested"), step.mask.as_ref());
            add_into(&mut dh_bottom, &dh0);
            let (_, dh0_prev, dc0_prev) = self.encoder[0].step_backward(
                &step.bottom,
                &dh_bottom,
                &dc0,
                &mut grad.encoder[0],
                false,
            );
            dh0 = dh0_prev;
            dc0 = dc0_prev;
            dh1 = dh1_prev;
            dc1 = dc1_prev;
        }
        loss
    }

    /// Mean reconstruction loss of a batch of equally long sequences and its
    /// exact gradient with respect to every parameter.
    ///
    /// In `Train` mode one seed is drawn from the stream and each fixed-size
    /// chunk of the batch takes its dropout masks from a child stream of that
    /// seed, so the result does not depend on how chunks are scheduled.
    pub fn backward(&self, batch: &[&Matrix], mode: Mode<'_>) -> Result<(f64, AutoencoderModel)> {
        let len = self.check_batch(batch)?;
        let base = match mode {
            Mode::Train(stream) => Some(stream.fork()),
            Mode::Eval => None,
        };
        let scale = 1.0 / batch.len() as f64;
        let parts: Vec<(f64, AutoencoderModel)> = batch
            .par_chunks(GRADIENT_CHUNK)
            .enumerate()
            .map(|(i, chunk)| {
                let mut grad = self.zeros_like();
                let mut sub = base.as_ref().map(|b| b.split(i as u64));
                let mode = match sub.as_mut() {
                    Some(s) => Mode::Train(s),
                    None => Mode::Eval,
                };
                let loss = self.chunk_gradient(chunk, len, mode, scale, &mut grad);
                (loss, grad)
            })
            .collect();
        let mut total = self.zeros_like();
        let mut loss = 0.0;
        for (l, g) in &parts {
            loss += l;
            total.add_assign(g);
        }
        Ok((loss * scale, total))
    }
}

impl ParamSet for AutoencoderModel {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut v = Vec::with_capacity(14);
        for layer in self.encoder.iter().chain(self.decoder.iter()) {
            v.extend(layer.tensors());
        }
        v.push(self.w_out.as_slice());
        v.push(&self.b_out);
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = Vec::with_capacity(14);
        for layer in self.encoder.iter_mut().chain(self.decoder.iter_mut()) {
            v.extend(layer.tensors_mut());
        }
        v.push(self.w_out.as_mut_slice());
        v.push(&mut self.b_out);
        v
    }
}

/// Mean squared error over all timesteps and features.
pub fn reconstruction_loss(pred: &Matrix, target: &Matrix) -> Result<f64> {
    if pred.rows() != target.rows() {
        return Err(Error::dim(target.rows(), pred.rows(), "reconstruction timesteps"));
    }
    if pred.cols() != target.cols() {
        return Err(Error::dim(target.cols(), pred.cols(), "reconstruction features"));
    }
    let n = pred.as_slice().len();
    if n == 0 {
        return Err(Error::EmptyInput("reconstruction of an empty sequence"));
    }
    let ss: f64 = pred
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(ss / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lstm::{lstm_cell_forward, CellState};

    fn random_seq(len: usize, f: usize, s: &mut RandomStream) -> Matrix {
        Matrix::from_vec(len, f, (0..len * f).map(|_| s.normal()).collect()).unwrap()
    }

    #[test]
    fn zero_model_gives_zero_context_and_constant_decode() {
        let m = AutoencoderModel::zeros(3, 5);
        let mut s = RandomStream::new(1);
        let x = random_seq(7, 3, &mut s);
        let c = m.encode(&x, Mode::Eval).unwrap();
        assert_eq!(c.0, vec![0.0; 5]);
        let mut m2 = m.clone();
        m2.b_out = vec![0.3, -1.0, 2.0];
        let y = m2.decode(&ContextVector(vec![0.4; 5]), 5, Mode::Eval).unwrap();
        assert_eq!(y.rows(), 5);
        for t in 0..5 {
            assert_eq!(y.row(t), &[0.3, -1.0, 2.0]);
        }
    }

    #[test]
    fn single_step_encode_is_two_stacked_cells() {
        let mut s = RandomStream::new(8);
        let mut m = AutoencoderModel::new(2, 4, &mut s);
        for l in m.encoder.iter_mut() {
            *l = LstmLayer::init_uniform(l.input_size(), 4, 0.5, &mut s);
        }
        let x = random_seq(1, 2, &mut s);
        let c = m.encode(&x, Mode::Eval).unwrap();
        let first = lstm_cell_forward(x.row(0), &CellState::zeros(4), &m.encoder[0]).unwrap();
        let second = lstm_cell_forward(&first.hidden, &CellState::zeros(4), &m.encoder[1]).unwrap();
        for (a, b) in c.0.iter().zip(&second.hidden) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn palindrome_is_reverse_invariant() {
        let mut s = RandomStream::new(4);
        let mut m = AutoencoderModel::new(1, 6, &mut s);
        let x = Matrix::from_vec(5, 1, vec![0.1, -0.4, 0.9, -0.4, 0.1]).unwrap();
        m.reverse_input = true;
        let a = m.encode(&x, Mode::Eval).unwrap();
        m.reverse_input = false;
        let b = m.encode(&x, Mode::Eval).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_sequence_and_zero_length_rejected() {
        let m = AutoencoderModel::zeros(2, 3);
        let empty = Matrix::zeros(0, 2);
        assert!(matches!(m.encode(&empty, Mode::Eval), Err(Error::EmptyInput(_))));
        assert!(matches!(
            m.decode(&ContextVector(vec![0.0; 3]), 0, Mode::Eval),
            Err(Error::InvalidLength(_))
        ));
        assert!(matches!(
            m.decode(&ContextVector(vec![0.0; 2]), 3, Mode::Eval),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn eval_decode_is_deterministic() {
        let mut s = RandomStream::new(12);
        let m = AutoencoderModel::new(2, 4, &mut s);
        let c = ContextVector((0..4).map(|_| s.normal()).collect());
        assert_eq!(
            m.decode(&c, 6, Mode::Eval).unwrap(),
            m.decode(&c, 6, Mode::Eval).unwrap()
        );
    }

    #[test]
    fn loss_examples() {
        let mut s = RandomStream::new(2);
        let a = random_seq(4, 3, &mut s);
        assert_eq!(reconstruction_loss(&a, &a).unwrap(), 0.0);
        let mut b = a.clone();
        b.as_mut_slice().iter_mut().for_each(|v| *v += 1.0);
        assert!((reconstruction_loss(&b, &a).unwrap() - 1.0).abs() < 1e-15);
        let c = random_seq(4, 3, &mut s);
        let mut acc = 0.0;
        for t in 0..4 {
            for j in 0..3 {
                acc += (c.get(t, j) - a.get(t, j)).powi(2);
            }
        }
        assert!((reconstruction_loss(&c, &a).unwrap() - acc / 12.0).abs() < 1e-12);
        assert!(reconstruction_loss(&c, &random_seq(3, 3, &mut s)).is_err());
    }

    #[test]
    fn zero_loss_gives_zero_gradient() {
        // zero model decodes to b_out everywhere; target equal to it
        let mut m = AutoencoderModel::zeros(2, 3);
        m.b_out = vec![0.25, -0.5];
        let target = Matrix::from_rows(&vec![vec![0.25, -0.5]; 4]).unwrap();
        let (loss, g) = m.backward(&[&target], Mode::Eval).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.tensors().iter().all(|t| t.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn batch_gradient_is_mean_of_singles() {
        let mut s = RandomStream::new(21);
        let mut m = AutoencoderModel::new(2, 3, &mut s);
        m.dropout = 0.0;
        let seqs: Vec<Matrix> = (0..11).map(|_| random_seq(4, 2, &mut s)).collect();
        let refs: Vec<&Matrix> = seqs.iter().collect();
        let (loss, g) = m.backward(&refs, Mode::Eval).unwrap();
        let mut want = m.zeros_like();
        let mut want_loss = 0.0;
        for x in &seqs {
            let (l, gi) = m.backward(&[x], Mode::Eval).unwrap();
            want_loss += l / 11.0;
            for (w, t) in want.tensors_mut().into_iter().zip(gi.tensors()) {
                for (a, b) in w.iter_mut().zip(t) {
                    *a += b / 11.0;
                }
            }
        }
        assert!((loss - want_loss).abs() < 1e-12);
        for (a, b) in g.tensors().iter().zip(want.tensors()) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
