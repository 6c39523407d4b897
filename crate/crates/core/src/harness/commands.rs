use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;

use super::config::{DataKind, ExperimentConfig, Variant};
use super::svg::{line_plot, Series};
use crate::augment::{add_noise, augment_dataset, extrapolate, interpolate, target_length, Operator};
use crate::autoencoder::{AutoencoderModel, ContextVector, Mode};
use crate::checkpoint::{fingerprint, Checkpoint};
use crate::classifier::{evaluate, stratified_folds, train_classifier, EvalResult, MlpModel};
use crate::datasets::{
    gen_boundary_dataset, gen_sinusoids, normalize_global, normalize_local, points_as_sequences,
    write_csv_sequences, load_csv_sequences, BoundarySpec, NormalizationRecord, SequenceSample,
    SinusoidSpec,
};
use crate::error::{Error, Result};
use crate::optim::UpdateBudget;
use crate::tensor::{per_element_std, Matrix, RandomStream};
use crate::training::{per_sample_reconstruction, train_autoencoder, write_loss_log, TrainReport};

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const LOSS_LOG_FILE: &str = "loss_log.csv";
pub const CLASSIFY_RUNS_FILE: &str = "classify_runs.csv";
pub const CLASSIFY_SUMMARY_FILE: &str = "classify_summary.csv";
pub const ROUNDTRIP_FILE: &str = "roundtrip.csv";
pub const ROUNDTRIP_SUMMARY_FILE: &str = "roundtrip_summary.csv";
pub const SWEEP_PLOT_FILE: &str = "sweep.svg";

/// Raw (un-normalised) train and optional test sequences.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: Vec<SequenceSample>,
    pub test: Option<Vec<SequenceSample>>,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))
}

/// Generates or loads the configured dataset. Local centring, when enabled,
/// is applied here since it needs no fitted state.
pub fn load_dataset(config: &ExperimentConfig) -> Result<Dataset> {
    let root = RandomStream::new(config.seed);
    let data = &config.data;
    let (train, test) = match data.kind {
        DataKind::Sinusoids => {
            let spec = &data.sinusoids;
            let train = gen_sinusoids(&spec.train, &mut root.split_named("train-data"))?;
            let test = if spec.test_count > 0 {
                let test_spec = SinusoidSpec {
                    count: spec.test_count,
                    ..spec.train.clone()
                };
                Some(gen_sinusoids(&test_spec, &mut root.split_named("test-data"))?)
            } else {
                None
            };
            (train, test)
        }
        DataKind::Boundary => {
            let spec = &data.boundary;
            let train = gen_boundary_dataset(&spec.train, &mut root.split_named("train-data"))?;
            let test = if spec.test_samples_per_class > 0 {
                let test_spec = BoundarySpec {
                    samples_per_class: spec.test_samples_per_class,
                    ..spec.train.clone()
                };
                let pts = gen_boundary_dataset(&test_spec, &mut root.split_named("test-data"))?;
                Some(points_as_sequences(&pts))
            } else {
                None
            };
            (points_as_sequences(&train), test)
        }
        DataKind::Csv => {
            let csv = &data.csv;
            let train = load_csv_sequences(&csv.train, &csv.schema)?;
            let test = match &csv.test {
                Some(p) => Some(load_csv_sequences(p, &csv.schema)?),
                None => None,
            };
            (train, test)
        }
    };
    let local = |v: Vec<SequenceSample>| -> Vec<SequenceSample> {
        if data.local_normalization {
            v.iter().map(normalize_local).collect()
        } else {
            v
        }
    };
    Ok(Dataset {
        train: local(train),
        test: test.map(local),
    })
}

fn fit_normalization(config: &ExperimentConfig, train: &[SequenceSample]) -> Result<NormalizationRecord> {
    let features = train
        .first()
        .ok_or_else(|| Error::InsufficientData("training set is empty".into()))?
        .features();
    if config.data.global_normalization {
        Ok(normalize_global(train)?.1)
    } else {
        Ok(NormalizationRecord::identity(features))
    }
}

pub struct TrainOutputs {
    pub checkpoint: PathBuf,
    pub loss_log: PathBuf,
    pub report: TrainReport,
}

/// Trains the sequence autoencoder and writes the checkpoint and loss log.
pub fn cmd_train_sa(config: &ExperimentConfig) -> Result<TrainOutputs> {
    ensure_dir(&config.out_dir)?;
    let root = RandomStream::new(config.seed);
    let data = load_dataset(config)?;
    let record = fit_normalization(config, &data.train)?;
    let train = record.apply_all(&data.train)?;
    let ae = &config.autoencoder;
    let mut model = AutoencoderModel::new(train[0].features(), ae.hidden, &mut root.split_named("sa-init"));
    model.dropout = ae.dropout;
    model.context_dropout = ae.context_dropout;
    model.reverse_input = ae.reverse_input;
    info!(
        "training autoencoder: {} sequences, hidden {}, {} updates",
        train.len(),
        ae.hidden,
        ae.updates
    );
    let (model, report) = train_autoencoder(
        model,
        &train,
        UpdateBudget::new(ae.updates)?,
        &ae.train,
        &mut root.split_named("sa-train"),
    )?;
    let checkpoint = Checkpoint {
        model,
        normalization: record,
        fingerprint: fingerprint(&config.fingerprint_text()?),
    };
    let ck_path = config.out_dir.join(CHECKPOINT_FILE);
    checkpoint.save(&ck_path)?;
    let log_path = config.out_dir.join(LOSS_LOG_FILE);
    write_loss_log(&log_path, &report.history)?;
    Ok(TrainOutputs {
        checkpoint: ck_path,
        loss_log: log_path,
        report,
    })
}

fn find_sample<'a>(samples: &'a [SequenceSample], id: usize) -> Result<&'a SequenceSample> {
    samples
        .iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::Parameter(format!("no sample with id {id} in the training set")))
}

fn sequence_csv(values: &Matrix) -> String {
    let mut out = String::from("t");
    for c in 0..values.cols() {
        let _ = write!(out, ",f{c}");
    }
    out.push('\n');
    for r in 0..values.rows() {
        let _ = write!(out, "{r}");
        for v in values.row(r) {
            let _ = write!(out, ",{v:.17e}");
        }
        out.push('\n');
    }
    out
}

/// One decoded sweep curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve {
    pub lambda: f64,
    /// Decoded sequence mapped back to data units.
    pub values: Matrix,
}

pub struct SweepOutputs {
    pub csv_files: Vec<PathBuf>,
    pub plot: PathBuf,
    pub curves: Vec<SweepCurve>,
}

/// Decodes `operator(c_j, c_k, lambda)` for every lambda of the grid.
///
/// For the noise operator each grid point is an independent noisy child of
/// `c_j` (scaled by `augment.gamma`); the lambda value only labels the file.
pub fn sweep_curves(
    model: &AutoencoderModel,
    record: &NormalizationRecord,
    train: &[SequenceSample],
    pair: (usize, usize),
    operator: Operator,
    lambdas: &[f64],
    gamma: f64,
    stream: &RandomStream,
) -> Result<Vec<SweepCurve>> {
    let sj = find_sample(train, pair.0)?;
    let sk = find_sample(train, pair.1)?;
    let cj = model.encode(&sj.values, Mode::Eval)?;
    let ck = model.encode(&sk.values, Mode::Eval)?;
    let sigma = if operator == Operator::Noise {
        let seqs: Vec<&Matrix> = train.iter().map(|s| &s.values).collect();
        per_element_std(&model.encode_all(&seqs)?)?
    } else {
        Vec::new()
    };
    let length = target_length(operator, sj.len(), sk.len());
    lambdas
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let c: ContextVector = match operator {
                Operator::Interpolate => interpolate(&cj, &ck, lambda)?,
                Operator::Extrapolate => extrapolate(&cj, &ck, lambda)?,
                Operator::Noise => add_noise(&cj, &sigma, gamma, &mut stream.split(i as u64))?,
            };
            let decoded = model.decode(&c, length, Mode::Eval)?;
            let sample = record.invert(&SequenceSample::new(i, None, decoded));
            Ok(SweepCurve {
                lambda,
                values: sample.values,
            })
        })
        .collect()
}

/// Writes one CSV per grid point plus a combined SVG of the first feature.
pub fn cmd_sweep(config: &ExperimentConfig, checkpoint: &Path) -> Result<SweepOutputs> {
    ensure_dir(&config.out_dir)?;
    let ck = Checkpoint::load(checkpoint)?;
    let data = load_dataset(config)?;
    let train = ck.normalization.apply_all(&data.train)?;
    let sw = &config.sweep;
    let curves = sweep_curves(
        &ck.model,
        &ck.normalization,
        &train,
        sw.pair,
        sw.operator,
        &sw.lambdas,
        config.augment.gamma,
        &RandomStream::new(config.seed).split_named("sweep"),
    )?;
    let op = format!("{:?}", sw.operator).to_lowercase();
    let mut csv_files = Vec::new();
    let mut series = Vec::new();
    for (i, curve) in curves.iter().enumerate() {
        let path = config
            .out_dir
            .join(format!("sweep_{op}_{i:02}_lambda_{:.3}.csv", curve.lambda));
        write_file(&path, &sequence_csv(&curve.values))?;
        csv_files.push(path);
        series.push(Series {
            name: format!("lambda = {:.3}", curve.lambda),
            points: (0..curve.values.rows())
                .map(|t| (t as f64, curve.values.get(t, 0)))
                .collect(),
        });
    }
    let plot = config.out_dir.join(SWEEP_PLOT_FILE);
    let title = format!("{op} between samples {} and {}", sw.pair.0, sw.pair.1);
    write_file(&plot, &line_plot(&title, &series))?;
    Ok(SweepOutputs {
        csv_files,
        plot,
        curves,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub variant: Variant,
    pub run: usize,
    pub error: f64,
    pub updates: u64,
    pub train_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantSummary {
    pub variant: Variant,
    pub result: EvalResult,
    pub updates: u64,
}

pub struct ClassifyOutputs {
    pub runs_csv: PathBuf,
    pub summary_csv: PathBuf,
    pub runs: Vec<RunRecord>,
    pub summary: Vec<VariantSummary>,
}

fn labels_of(samples: &[SequenceSample]) -> Result<Vec<usize>> {
    samples
        .iter()
        .map(|s| {
            s.label.ok_or_else(|| {
                Error::InsufficientData(format!("sample {} has no label; classification needs labels", s.id))
            })
        })
        .collect()
}

fn select_rows(m: &Matrix, idx: &[usize]) -> Matrix {
    let mut out = Matrix::zeros(idx.len(), m.cols());
    for (r, &i) in idx.iter().enumerate() {
        out.row_mut(r).copy_from_slice(m.row(i));
    }
    out
}

/// A train/test split of context vectors for one run.
struct Split {
    train_x: Matrix,
    train_y: Vec<usize>,
    train_len: Vec<usize>,
    test_x: Matrix,
    test_y: Vec<usize>,
}

/// Trains one classifier per (variant, run) on contexts from the checkpoint
/// and writes per-run and summary CSVs. Every variant gets the same update
/// budget; a mismatch in the logged counts is reported as an error.
pub fn cmd_classify(config: &ExperimentConfig, checkpoint: &Path) -> Result<ClassifyOutputs> {
    ensure_dir(&config.out_dir)?;
    let ck = Checkpoint::load(checkpoint)?;
    let data = load_dataset(config)?;
    let train = ck.normalization.apply_all(&data.train)?;
    let train_y = labels_of(&train)?;
    let encode = |s: &[SequenceSample]| {
        let seqs: Vec<&Matrix> = s.iter().map(|x| &x.values).collect();
        ck.model.encode_all(&seqs)
    };
    let train_c = encode(&train)?;
    let train_len: Vec<usize> = train.iter().map(|s| s.len()).collect();
    let root = RandomStream::new(config.seed).split_named("classify");
    let cl = &config.classify;

    let splits: Vec<Split> = match &data.test {
        Some(test) => {
            let test = ck.normalization.apply_all(test)?;
            let test_y = labels_of(&test)?;
            let test_c = encode(&test)?;
            (0..cl.runs)
                .map(|_| Split {
                    train_x: train_c.clone(),
                    train_y: train_y.clone(),
                    train_len: train_len.clone(),
                    test_x: test_c.clone(),
                    test_y: test_y.clone(),
                })
                .collect()
        }
        None => {
            let folds = stratified_folds(&train_y, cl.folds, &mut root.split_named("folds"))?;
            folds
                .iter()
                .map(|test_idx| {
                    let train_idx: Vec<usize> =
                        (0..train_y.len()).filter(|i| test_idx.binary_search(i).is_err()).collect();
                    Split {
                        train_x: select_rows(&train_c, &train_idx),
                        train_y: train_idx.iter().map(|&i| train_y[i]).collect(),
                        train_len: train_idx.iter().map(|&i| train_len[i]).collect(),
                        test_x: select_rows(&train_c, test_idx),
                        test_y: test_idx.iter().map(|&i| train_y[i]).collect(),
                    }
                })
                .collect()
        }
    };
    let classes = splits
        .iter()
        .flat_map(|s| s.train_y.iter().chain(&s.test_y))
        .max()
        .map_or(0, |m| m + 1);
    let budget = UpdateBudget::new(cl.model.updates)?;

    let mut runs = Vec::new();
    let mut summary = Vec::new();
    for &variant in &cl.variants {
        let mut errors = Vec::new();
        let mut counts = Vec::new();
        for (run, split) in splits.iter().enumerate() {
            let stream = root.split(run as u64);
            let (x, y) = match variant.augment(&config.augment) {
                None => (split.train_x.clone(), split.train_y.clone()),
                Some(aug) => {
                    let synth = augment_dataset(
                        &split.train_x,
                        &split.train_y,
                        &split.train_len,
                        &aug,
                        &stream.split_named("augment").split_named(variant.name()),
                    )?;
                    let mut rows: Vec<&[f64]> =
                        (0..split.train_x.rows()).map(|i| split.train_x.row(i)).collect();
                    rows.extend(synth.iter().map(|s| s.values.as_slice()));
                    let mut y = split.train_y.clone();
                    y.extend(synth.iter().map(|s| s.label));
                    (Matrix::from_rows(&rows)?, y)
                }
            };
            let mut model = MlpModel::new(x.cols(), cl.model.hidden, classes, &mut stream.split_named("mlp-init"));
            model.dropout = cl.model.dropout;
            let (model, updates) = train_classifier(
                model,
                &x,
                &y,
                budget,
                &cl.model,
                &mut stream.split_named("mlp-train"),
            )?;
            let error = evaluate(&model, &split.test_x, &split.test_y)?;
            info!(
                "{} run {run}: {} training contexts, error {error:.3}%",
                variant.name(),
                x.rows()
            );
            errors.push(error);
            counts.push(updates);
            runs.push(RunRecord {
                variant,
                run,
                error,
                updates,
                train_size: x.rows(),
            });
        }
        if let Some(bad) = counts.iter().find(|&&c| c != budget.total()) {
            return Err(Error::Parameter(format!(
                "update budget parity violated: {} performed {bad} updates, expected {}",
                variant.name(),
                budget.total()
            )));
        }
        let result = if errors.len() >= 2 {
            EvalResult::from_errors(errors)?
        } else {
            return Err(Error::Parameter("at least 2 runs or folds are required".into()));
        };
        summary.push(VariantSummary {
            variant,
            result,
            updates: budget.total(),
        });
    }

    let id = &config.experiment_id;
    let mut runs_csv = String::from("experiment_id,variant,run,error,updates,train_size\n");
    for r in &runs {
        let _ = writeln!(
            runs_csv,
            "{id},{},{},{:.6},{},{}",
            r.variant.name(),
            r.run,
            r.error,
            r.updates,
            r.train_size
        );
    }
    let mut summary_csv = String::from("experiment_id,variant,runs,mean_error,std_error,updates\n");
    for s in &summary {
        let _ = writeln!(
            summary_csv,
            "{id},{},{},{:.6},{:.6},{}",
            s.variant.name(),
            s.result.runs(),
            s.result.mean,
            s.result.std,
            s.updates
        );
    }
    let runs_path = config.out_dir.join(CLASSIFY_RUNS_FILE);
    let summary_path = config.out_dir.join(CLASSIFY_SUMMARY_FILE);
    write_file(&runs_path, &runs_csv)?;
    write_file(&summary_path, &summary_csv)?;
    Ok(ClassifyOutputs {
        runs_csv: runs_path,
        summary_csv: summary_path,
        runs,
        summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitChoice {
    Train,
    Test,
}

pub struct RoundtripOutputs {
    pub report: PathBuf,
    pub summary: PathBuf,
    pub per_sample: Vec<f64>,
    pub aggregate: f64,
}

/// Eval-mode reconstruction error of every sample in normalised units.
///
/// Defaults to the held-out set when the dataset has one.
pub fn cmd_roundtrip_check(
    config: &ExperimentConfig,
    checkpoint: &Path,
    split: Option<SplitChoice>,
) -> Result<RoundtripOutputs> {
    ensure_dir(&config.out_dir)?;
    let ck = Checkpoint::load(checkpoint)?;
    let data = load_dataset(config)?;
    let raw = match (split, data.test) {
        (Some(SplitChoice::Train), _) | (None, None) => data.train,
        (_, Some(test)) => test,
        (Some(SplitChoice::Test), None) => {
            return Err(Error::InsufficientData("dataset has no test split".into()))
        }
    };
    let samples = ck.normalization.apply_all(&raw)?;
    let refs: Vec<&SequenceSample> = samples.iter().collect();
    if refs.is_empty() {
        return Err(Error::InsufficientData("no samples to reconstruct".into()));
    }
    let per_sample = per_sample_reconstruction(&ck.model, &refs)?;
    let aggregate = per_sample.iter().sum::<f64>() / per_sample.len() as f64;

    let mut report = String::from("sample_id,length,mse\n");
    for (s, mse) in samples.iter().zip(&per_sample) {
        let _ = writeln!(report, "{},{},{mse:.17e}", s.id, s.len());
    }
    let summary = format!("samples,mean_mse\n{},{aggregate:.17e}\n", per_sample.len());
    let report_path = config.out_dir.join(ROUNDTRIP_FILE);
    let summary_path = config.out_dir.join(ROUNDTRIP_SUMMARY_FILE);
    write_file(&report_path, &report)?;
    write_file(&summary_path, &summary)?;
    Ok(RoundtripOutputs {
        report: report_path,
        summary: summary_path,
        per_sample,
        aggregate,
    })
}

/// Writes the configured dataset in the CSV sequence format.
pub fn cmd_gen_data(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    ensure_dir(&config.out_dir)?;
    let data = load_dataset(config)?;
    let mut written = Vec::new();
    let train = config.out_dir.join("train.csv");
    write_csv_sequences(&train, &data.train)?;
    written.push(train);
    if let Some(test) = &data.test {
        let path = config.out_dir.join("test.csv");
        write_csv_sequences(&path, test)?;
        written.push(path);
    }
    Ok(written)
}
