//! Adam, validation-plateau learning-rate halving and fixed update budgets.

use crate::error::{Error, Result};

/// A model whose parameters can be viewed as an ordered list of flat tensors.
///
/// The order must be stable: optimizer state and checkpoints rely on it.
pub trait ParamSet {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn add_assign(&mut self, other: &Self)
    where
        Self: Sized,
    {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= factor);
        }
    }

    fn global_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }
}

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;
pub const DEFAULT_LEARNING_RATE: f64 = 0.001;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new<P: ParamSet>(params: &P, learning_rate: f64) -> Self {
        let shapes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
        Self {
            first_moment: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            step: 0,
            learning_rate,
            beta1: BETA1,
            beta2: BETA2,
            epsilon: EPSILON,
        }
    }
}

/// One bias-corrected Adam update of `params` along `grads`.
pub fn adam_step<P: ParamSet>(params: &mut P, grads: &P, state: &mut AdamState) -> Result<()> {
    let grads = grads.tensors();
    let mut params = params.tensors_mut();
    if grads.len() != params.len() || state.first_moment.len() != params.len() {
        return Err(Error::dim(params.len(), grads.len(), "adam tensor count"));
    }
    for ((p, g), m) in params.iter().zip(&grads).zip(&state.first_moment) {
        if p.len() != g.len() || p.len() != m.len() {
            return Err(Error::dim(p.len(), g.len(), "adam tensor shape"));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let (b1, b2, lr, eps) = (state.beta1, state.beta2, state.learning_rate, state.epsilon);
    for (((p, g), m), v) in params
        .iter_mut()
        .zip(&grads)
        .zip(state.first_moment.iter_mut())
        .zip(state.second_moment.iter_mut())
    {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

/// Halves the learning rate after `patience` epochs without validation improvement.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauSchedule {
    pub patience: usize,
    pub factor: f64,
    /// Minimum relative decrease that counts as an improvement.
    pub min_relative_improvement: f64,
    pub best: f64,
    pub epochs_since_improvement: usize,
    pub learning_rate: f64,
}

impl PlateauSchedule {
    pub fn new(learning_rate: f64, patience: usize) -> Result<Self> {
        if patience == 0 {
            return Err(Error::Parameter("plateau patience must be at least 1".into()));
        }
        if !(learning_rate > 0.0) {
            return Err(Error::Parameter(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        Ok(Self {
            patience,
            factor: 0.5,
            min_relative_improvement: 1e-6,
            best: f64::INFINITY,
            epochs_since_improvement: 0,
            learning_rate,
        })
    }

    /// Records one epoch's validation loss and returns the (possibly reduced) rate.
    pub fn update(&mut self, validation_loss: f64) -> Result<f64> {
        if !validation_loss.is_finite() {
            return Err(Error::InvalidLoss(validation_loss));
        }
        let threshold = if self.best.is_finite() {
            self.best - self.min_relative_improvement * self.best.abs()
        } else {
            f64::INFINITY
        };
        if validation_loss < threshold {
            self.best = validation_loss;
            self.epochs_since_improvement = 0;
        } else {
            self.epochs_since_improvement += 1;
            if self.epochs_since_improvement >= self.patience {
                self.learning_rate *= self.factor;
                self.epochs_since_improvement = 0;
            }
        }
        Ok(self.learning_rate)
    }
}

/// Exact number of weight updates a training run performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdateBudget(u64);

impl UpdateBudget {
    pub fn new(total: u64) -> Result<Self> {
        if total == 0 {
            return Err(Error::Parameter("update budget must be positive".into()));
        }
        Ok(Self(total))
    }

    pub fn total(&self) -> u64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Scalar(Vec<f64>);

    impl ParamSet for Scalar {
        fn tensors(&self) -> Vec<&[f64]> {
            vec![&self.0]
        }
        fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
            vec![&mut self.0]
        }
    }

    /// Textbook scalar Adam written out separately.
    fn scalar_adam(p0: f64, grads: &[f64], lr: f64) -> f64 {
        let (mut p, mut m, mut v) = (p0, 0.0f64, 0.0f64);
        for (k, g) in grads.iter().enumerate() {
            let t = (k + 1) as f64;
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            let mh = m / (1.0 - 0.9f64.powf(t));
            let vh = v / (1.0 - 0.999f64.powf(t));
            p -= lr * mh / (vh.sqrt() + 1e-8);
        }
        p
    }

    #[test]
    fn zero_gradient_is_noop() {
        let mut p = Scalar(vec![1.0, -2.0]);
        let g = Scalar(vec![0.0, 0.0]);
        let mut st = AdamState::new(&p, 0.001);
        adam_step(&mut p, &g, &mut st).unwrap();
        assert_eq!(p.0, vec![1.0, -2.0]);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn first_step_scalar() {
        let mut p = Scalar(vec![0.0]);
        let g = Scalar(vec![1.0]);
        let mut st = AdamState::new(&p, 0.001);
        adam_step(&mut p, &g, &mut st).unwrap();
        assert!((p.0[0] - (-0.000999999990)).abs() < 1e-15, "{}", p.0[0]);
    }

    #[test]
    fn matches_scalar_oracle_over_100_steps() {
        let mut s = crate::tensor::RandomStream::new(77);
        let grads: Vec<f64> = (0..100).map(|_| s.normal()).collect();
        let mut p = Scalar(vec![0.3]);
        let mut st = AdamState::new(&p, 0.01);
        for g in &grads {
            adam_step(&mut p, &Scalar(vec![*g]), &mut st).unwrap();
        }
        assert!((p.0[0] - scalar_adam(0.3, &grads, 0.01)).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut p = Scalar(vec![0.0, 1.0]);
        let mut st = AdamState::new(&p, 0.001);
        assert!(adam_step(&mut p, &Scalar(vec![1.0]), &mut st).is_err());
    }

    #[test]
    fn plateau_keeps_rate_while_improving() {
        let mut sch = PlateauSchedule::new(0.001, 10).unwrap();
        for k in 0..50 {
            assert_eq!(sch.update(1.0 / (k + 1) as f64).unwrap(), 0.001);
        }
    }

    #[test]
    fn plateau_halves_after_ten_flat_epochs() {
        let mut sch = PlateauSchedule::new(0.001, 10).unwrap();
        sch.update(1.0).unwrap();
        for _ in 0..9 {
            assert_eq!(sch.update(1.0).unwrap(), 0.001);
        }
        assert_eq!(sch.update(1.0).unwrap(), 0.0005);
        for _ in 0..10 {
            sch.update(1.0).unwrap();
        }
        assert_eq!(sch.learning_rate, 0.00025);
    }

    #[test]
    fn plateau_ignores_jitter_and_rejects_nan() {
        let mut sch = PlateauSchedule::new(0.001, 2).unwrap();
        sch.update(1.0).unwrap();
        sch.update(1.0 - 1e-9).unwrap();
        sch.update(1.0 - 2e-9).unwrap();
        assert_eq!(sch.learning_rate, 0.0005);
        assert!(matches!(sch.update(f64::NAN), Err(Error::InvalidLoss(_))));
        assert!(PlateauSchedule::new(0.001, 0).is_err());
    }

    #[test]
    fn budget_must_be_positive() {
        assert!(UpdateBudget::new(0).is_err());
        assert_eq!(UpdateBudget::new(3).unwrap().total(), 3);
    }
}
