//! Autoencoder training under a fixed weight-update budget.

use std::io::Write;
use std::path::Path;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::autoencoder::{reconstruction_loss, AutoencoderModel, Mode};
use crate::datasets::{length_buckets, SequenceSample};
use crate::error::{Error, Result};
use crate::optim::{adam_step, AdamState, ParamSet, PlateauSchedule, UpdateBudget};
use crate::tensor::{Matrix, RandomStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub patience: usize,
    pub validation_fraction: f64,
    /// Global gradient-norm clip; off by default.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            learning_rate: 0.001,
            patience: 10,
            validation_fraction: 0.1,
            clip_norm: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Learning rate in effect at the end of the epoch.
    pub lr: f64,
    /// Cumulative weight updates so far.
    pub updates: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub history: Vec<EpochRecord>,
    pub updates: u64,
}

/// Deterministic train/validation split of `n` indices.
///
/// The validation part has `round(n * fraction)` members, at least one and
/// at most `n - 1`.
pub fn split_validation(
    n: usize,
    fraction: f64,
    stream: &mut RandomStream,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 samples for a validation split, got {n}"
        )));
    }
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::Parameter(format!(
            "validation fraction must lie in [0, 1), got {fraction}"
        )));
    }
    let n_val = ((n as f64 * fraction).round() as usize).clamp(1, n - 1);
    let mut idx: Vec<usize> = (0..n).collect();
    stream.shuffle(&mut idx);
    let mut val = idx[..n_val].to_vec();
    let mut train = idx[n_val..].to_vec();
    val.sort_unstable();
    train.sort_unstable();
    Ok((train, val))
}

/// One epoch's batches: samples shuffled inside each length bucket, cut into
/// batches of at most `batch_size`, then the batch order shuffled.
pub fn length_bucketed_batches(
    indices: &[usize],
    lengths: &[usize],
    batch_size: usize,
    stream: &mut RandomStream,
) -> Vec<Vec<usize>> {
    let mut batches = Vec::new();
    for (_, members) in length_buckets(indices.iter().map(|&i| lengths[i])) {
        let mut ids: Vec<usize> = members.iter().map(|&m| indices[m]).collect();
        stream.shuffle(&mut ids);
        batches.extend(ids.chunks(batch_size.max(1)).map(|c| c.to_vec()));
    }
    stream.shuffle(&mut batches);
    batches
}

/// Mean per-sequence reconstruction MSE in eval mode.
pub fn evaluate_reconstruction(model: &AutoencoderModel, samples: &[&SequenceSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no samples to evaluate".into()));
    }
    Ok(per_sample_reconstruction(model, samples)?.iter().sum::<f64>() / samples.len() as f64)
}

/// Eval-mode reconstruction MSE of every sample, in input order.
pub fn per_sample_reconstruction(
    model: &AutoencoderModel,
    samples: &[&SequenceSample],
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; samples.len()];
    for (len, idx) in length_buckets(samples.iter().map(|s| s.len())) {
        for chunk in idx.chunks(256) {
            let batch: Vec<&Matrix> = chunk.iter().map(|&i| &samples[i].values).collect();
            let ctx = model.encode_batch(&batch, Mode::Eval)?;
            let decoded = model.decode_batch(&ctx, len, Mode::Eval)?;
            for (&i, y) in chunk.iter().zip(&decoded) {
                out[i] = reconstruction_loss(y, &samples[i].values)?;
            }
        }
    }
    Ok(out)
}

/// Trains for exactly `budget` Adam updates, cycling through epochs as needed.
///
/// The validation loss after every epoch (including a final partial one)
/// drives the plateau schedule. Returns the final parameters.
pub fn train_autoencoder(
    mut model: AutoencoderModel,
    dataset: &[SequenceSample],
    budget: UpdateBudget,
    config: &TrainConfig,
    stream: &mut RandomStream,
) -> Result<(AutoencoderModel, TrainReport)> {
    if dataset.is_empty() {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    for s in dataset {
        if s.features() != model.feature_dim {
            return Err(Error::dim(model.feature_dim, s.features(), "training sample features"));
        }
        if s.is_empty() {
            return Err(Error::EmptyInput("training sample has no timesteps"));
        }
    }
    let (train_idx, val_idx) = split_validation(
        dataset.len(),
        config.validation_fraction,
        &mut stream.split_named("validation-split"),
    )?;
    let val: Vec<&SequenceSample> = val_idx.iter().map(|&i| &dataset[i]).collect();
    let lengths: Vec<usize> = dataset.iter().map(|s| s.len()).collect();

    let mut adam = AdamState::new(&model, config.learning_rate);
    let mut schedule = PlateauSchedule::new(config.learning_rate, config.patience)?;
    let mut batch_stream = stream.split_named("batches");
    let mut dropout_stream = stream.split_named("dropout");
    let mut history = Vec::new();
    let mut updates = 0u64;
    let mut epoch = 0usize;

    while updates < budget.total() {
        epoch += 1;
        let batches = length_bucketed_batches(&train_idx, &lengths, config.batch_size, &mut batch_stream);
        let mut loss_sum = 0.0;
        let mut seen = 0usize;
        for batch in batches {
            if updates == budget.total() {
                break;
            }
            let seqs: Vec<&Matrix> = batch.iter().map(|&i| &dataset[i].values).collect();
            let (loss, mut grad) = model.backward(&seqs, Mode::Train(&mut dropout_stream))?;
            if !loss.is_finite() {
                return Err(Error::InvalidLoss(loss));
            }
            if let Some(clip) = config.clip_norm {
                let norm = grad.global_norm();
                if norm > clip {
                    grad.scale(clip / norm);
                }
            }
            adam_step(&mut model, &grad, &mut adam)?;
            updates += 1;
            loss_sum += loss * batch.len() as f64;
            seen += batch.len();
        }
        let val_loss = evaluate_reconstruction(&model, &val)?;
        adam.learning_rate = schedule.update(val_loss)?;
        let rec = EpochRecord {
            epoch,
            train_loss: loss_sum / seen.max(1) as f64,
            val_loss,
            lr: adam.learning_rate,
            updates,
        };
        debug!(
            "epoch {} train {:.6} val {:.6} lr {:.2e} updates {}",
            rec.epoch, rec.train_loss, rec.val_loss, rec.lr, rec.updates
        );
        history.push(rec);
    }
    Ok((model, TrainReport { history, updates }))
}

/// CSV loss log with columns `epoch,train_loss,val_loss,lr`.
pub fn write_loss_log(path: &Path, history: &[EpochRecord]) -> Result<()> {
    let mut out = String::from("epoch,train_loss,val_loss,lr\n");
    for r in history {
        out.push_str(&format!(
            "{},{:.17e},{:.17e},{:.17e}\n",
            r.epoch, r.train_loss, r.val_loss, r.lr
        ));
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(out.as_bytes()))
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}
