//! Helpers shared by the integration test targets.

use feataug::autoencoder::{AutoencoderModel, Mode};
use feataug::optim::ParamSet;
use feataug::tensor::{Matrix, RandomStream};

/// Fourth-order central stencil step. Keeps truncation and roundoff error
/// both near 1e-13 for losses of order one.
const STEP: f64 = 1e-3;

/// Denominator floor: entries whose gradient is below this are compared in
/// absolute terms.
const FLOOR: f64 = 1e-8;

/// Largest relative disagreement over every parameter, with the loss evaluated
/// under a freshly seeded dropout stream each time so masks match.
pub fn max_relative_error(model: &AutoencoderModel, batch: &[&Matrix], dropout_seed: Option<u64>) -> f64 {
    let loss = |m: &AutoencoderModel| -> (f64, AutoencoderModel) {
        match dropout_seed {
            Some(seed) => m.backward(batch, Mode::Train(&mut RandomStream::new(seed))),
            None => m.backward(batch, Mode::Eval),
        }
        .unwrap()
    };
    let (_, grad) = loss(model);
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for t in 0..probe.tensors().len() {
        for i in 0..probe.tensors()[t].len() {
            let orig = probe.tensors()[t][i];
            let mut at = |delta: f64| {
                probe.tensors_mut()[t][i] = orig + delta;
                loss(&probe).0
            };
            let fd = (8.0 * (at(STEP) - at(-STEP)) - (at(2.0 * STEP) - at(-2.0 * STEP))) / (12.0 * STEP);
            probe.tensors_mut()[t][i] = orig;
            let an = grad.tensors()[t][i];
            let rel = (fd - an).abs() / (fd.abs() + an.abs()).max(FLOOR);
            worst = worst.max(rel);
        }
    }
    worst
}
