//! A single LSTM layer with batched forward and backward steps.
//!
//! Gate blocks are laid out `[input | forget | cell | output]` along the
//! columns of every weight matrix, so a step is two matrix products plus a
//! bias row.

use crate::error::{Error, Result};
use crate::tensor::{gemm, Matrix, Op, RandomStream};

/// Parameters of one LSTM layer.
///
/// `w_input` is `input_size x 4*hidden`, `w_recurrent` is `hidden x 4*hidden`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    pub w_input: Matrix,
    pub w_recurrent: Matrix,
    pub bias: Vec<f64>,
}

/// Hidden and cell state of one layer for a single sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct CellState {
    pub hidden: Vec<f64>,
    pub cell: Vec<f64>,
}

impl CellState {
    pub fn zeros(hidden_size: usize) -> Self {
        Self {
            hidden: vec![0.0; hidden_size],
            cell: vec![0.0; hidden_size],
        }
    }
}

/// Everything the backward pass needs from one forward step.
#[derive(Debug, Clone)]
pub struct StepCache {
    pub input: Matrix,
    pub h_prev: Matrix,
    pub c_prev: Matrix,
    /// Activated gates, `batch x 4*hidden`.
    pub gates: Matrix,
    pub c_tanh: Matrix,
    pub hidden: Matrix,
    pub cell: Matrix,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl LstmLayer {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        Self {
            w_input: Matrix::zeros(input_size, 4 * hidden_size),
            w_recurrent: Matrix::zeros(hidden_size, 4 * hidden_size),
            bias: vec![0.0; 4 * hidden_size],
        }
    }

    /// Uniform weights in `[-scale, scale]`, zero biases except the forget gate at +1.
    pub fn init_uniform(
        input_size: usize,
        hidden_size: usize,
        scale: f64,
        stream: &mut RandomStream,
    ) -> Self {
        let mut layer = Self::zeros(input_size, hidden_size);
        for w in layer
            .w_input
            .as_mut_slice()
            .iter_mut()
            .chain(layer.w_recurrent.as_mut_slice().iter_mut())
        {
            *w = stream.uniform_range(-scale, scale);
        }
        for b in &mut layer.bias[hidden_size..2 * hidden_size] {
            *b = 1.0;
        }
        layer
    }

    pub fn input_size(&self) -> usize {
        self.w_input.rows()
    }

    pub fn hidden_size(&self) -> usize {
        self.w_recurrent.rows()
    }

    /// Batched step: `input` is `batch x input_size`, states are `batch x hidden`.
    pub fn step(&self, input: &Matrix, h_prev: &Matrix, c_prev: &Matrix) -> StepCache {
        let batch = input.rows();
        let h = self.hidden_size();
        let mut gates = Matrix::zeros(batch, 4 * h);
        for r in 0..batch {
            gates.row_mut(r).copy_from_slice(&self.bias);
        }
        gemm(1.0, input, Op::N, &self.w_input, Op::N, 1.0, &mut gates);
        gemm(1.0, h_prev, Op::N, &self.w_recurrent, Op::N, 1.0, &mut gates);

        let mut cell = Matrix::zeros(batch, h);
        let mut c_tanh = Matrix::zeros(batch, h);
        let mut hidden = Matrix::zeros(batch, h);
        for r in 0..batch {
            let g = gates.row_mut(r);
            for v in &mut g[..2 * h] {
                *v = sigmoid(*v);
            }
            for v in &mut g[2 * h..3 * h] {
                *v = v.tanh();
            }
            for v in &mut g[3 * h..] {
                *v = sigmoid(*v);
            }
            let cp = c_prev.row(r);
            let cr = cell.row_mut(r);
            for j in 0..h {
                cr[j] = g[h + j] * cp[j] + g[j] * g[2 * h + j];
            }
            let tr = c_tanh.row_mut(r);
            for j in 0..h {
                tr[j] = cr[j].tanh();
            }
            let hr = hidden.row_mut(r);
            for j in 0..h {
                hr[j] = g[3 * h + j] * tr[j];
            }
        }
        StepCache {
            input: input.clone(),
            h_prev: h_prev.clone(),
            c_prev: c_prev.clone(),
            gates,
            c_tanh,
            hidden,
            cell,
        }
    }

    /// Backward through one step.
    ///
    /// `dh` and `dc` are the total gradients arriving at this step's hidden and
    /// cell outputs. Parameter gradients are accumulated into `grad`. Returns
    /// `(d_input, d_h_prev, d_c_prev)`; `d_input` is skipped when `need_input`
    /// is false.
    pub fn step_backward(
        &self,
        cache: &StepCache,
        dh: &Matrix,
        dc: &Matrix,
        grad: &mut LstmLayer,
        need_input: bool,
    ) -> (Option<Matrix>, Matrix, Matrix) {
        let batch = dh.rows();
        let h = self.hidden_size();
        let mut d_pre = Matrix::zeros(batch, 4 * h);
        let mut dc_prev = Matrix::zeros(batch, h);
        for r in 0..batch {
            let g = cache.gates.row(r);
            let tc = cache.c_tanh.row(r);
            let cp = cache.c_prev.row(r);
            let dhr = dh.row(r);
            let dcr = dc.row(r);
            let dp = d_pre.row_mut(r);
            let dcp = dc_prev.row_mut(r);
            for j in 0..h {
                let (i, f, gg, o) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                let d_o = dhr[j] * tc[j];
                let d_c = dcr[j] + dhr[j] * o * (1.0 - tc[j] * tc[j]);
                let d_i = d_c * gg;
                let d_g = d_c * i;
                let d_f = d_c * cp[j];
                dcp[j] = d_c * f;
                dp[j] = d_i * i * (1.0 - i);
                dp[h + j] = d_f * f * (1.0 - f);
                dp[2 * h + j] = d_g * (1.0 - gg * gg);
                dp[3 * h + j] = d_o * o * (1.0 - o);
            }
        }
        gemm(1.0, &cache.input, Op::T, &d_pre, Op::N, 1.0, &mut grad.w_input);
        gemm(1.0, &cache.h_prev, Op::T, &d_pre, Op::N, 1.0, &mut grad.w_recurrent);
        for r in 0..batch {
            for (b, d) in grad.bias.iter_mut().zip(d_pre.row(r)) {
                *b += d;
            }
        }
        let d_input = need_input.then(|| {
            let mut dx = Matrix::zeros(batch, self.input_size());
            gemm(1.0, &d_pre, Op::N, &self.w_input, Op::T, 0.0, &mut dx);
            dx
        });
        let mut dh_prev = Matrix::zeros(batch, h);
        gemm(1.0, &d_pre, Op::N, &self.w_recurrent, Op::T, 0.0, &mut dh_prev);
        (d_input, dh_prev, dc_prev)
    }

    pub fn tensors(&self) -> [&[f64]; 3] {
        [
            self.w_input.as_slice(),
            self.w_recurrent.as_slice(),
            &self.bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 3] {
        [
            self.w_input.as_mut_slice(),
            self.w_recurrent.as_mut_slice(),
            &mut self.bias,
        ]
    }
}

/// One step of a single sequence through `params`.
pub fn lstm_cell_forward(x: &[f64], state: &CellState, params: &LstmLayer) -> Result<CellState> {
    let h = params.hidden_size();
    if x.len() != params.input_size() {
        return Err(Error::dim(params.input_size(), x.len(), "lstm input"));
    }
    if state.hidden.len() != h || state.cell.len() != h {
        return Err(Error::dim(h, state.hidden.len(), "lstm state"));
    }
    let cache = params.step(
        &Matrix::from_vec(1, x.len(), x.to_vec())?,
        &Matrix::from_vec(1, h, state.hidden.clone())?,
        &Matrix::from_vec(1, h, state.cell.clone())?,
    );
    Ok(CellState {
        hidden: cache.hidden.into_vec(),
        cell: cache.cell.into_vec(),
    })
}
