use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::{AugmentConfig, NeighborPolicy, Operator};
use crate::classifier::ClassifierConfig;
use crate::datasets::{BoundarySpec, CsvSchema, SinusoidSpec};
use crate::error::{Error, Result};
use crate::training::TrainConfig;

fn unknown_keys(raw: &toml::Table, canonical: &toml::Table, prefix: &str, out: &mut Vec<String>) {
    for (key, value) in raw {
        let path = format!("{prefix}{key}");
        match (value, canonical.get(key)) {
            (_, None) => out.push(path),
            (toml::Value::Table(r), Some(toml::Value::Table(c))) => {
                unknown_keys(r, c, &format!("{path}."), out)
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Sinusoids,
    Boundary,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SinusoidData {
    #[serde(flatten)]
    pub train: SinusoidSpec,
    /// Held-out sequences generated from the same ranges.
    pub test_count: usize,
}

impl Default for SinusoidData {
    fn default() -> Self {
        Self {
            train: SinusoidSpec::default(),
            test_count: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoundaryData {
    #[serde(flatten)]
    pub train: BoundarySpec,
    pub test_samples_per_class: usize,
}

impl Default for BoundaryData {
    fn default() -> Self {
        Self {
            train: BoundarySpec::default(),
            test_samples_per_class: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvData {
    pub train: PathBuf,
    /// Without a test file, classification falls back to cross-validation.
    pub test: Option<PathBuf>,
    pub schema: CsvSchema,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    pub kind: DataKind,
    /// Centre each sample on its own per-feature mean before anything else.
    pub local_normalization: bool,
    /// Standardise features with statistics pooled over the training set.
    pub global_normalization: bool,
    pub sinusoids: SinusoidData,
    pub boundary: BoundaryData,
    pub csv: CsvData,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            kind: DataKind::Sinusoids,
            local_normalization: false,
            global_normalization: true,
            sinusoids: SinusoidData::default(),
            boundary: BoundaryData::default(),
            csv: CsvData::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AutoencoderConfig {
    pub hidden: usize,
    pub dropout: f64,
    pub context_dropout: bool,
    pub reverse_input: bool,
    pub updates: u64,
    pub train: TrainConfig,
}

impl Default for AutoencoderConfig {
    fn default() -> Self {
        Self {
            hidden: 32,
            dropout: 0.2,
            context_dropout: true,
            reverse_input: true,
            updates: 3000,
            train: TrainConfig::default(),
        }
    }
}

/// Training-set variants compared by `classify`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Baseline,
    Noise,
    RandomInterpolation,
    Interpolation,
    Extrapolation,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Baseline,
        Variant::Noise,
        Variant::RandomInterpolation,
        Variant::Interpolation,
        Variant::Extrapolation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::Noise => "noise",
            Variant::RandomInterpolation => "random-interpolation",
            Variant::Interpolation => "interpolation",
            Variant::Extrapolation => "extrapolation",
        }
    }

    /// The augmentation settings for this variant, or `None` for the baseline.
    pub fn augment(self, base: &AugmentConfig) -> Option<AugmentConfig> {
        let (operator, policy) = match self {
            Variant::Baseline => return None,
            Variant::Noise => (Operator::Noise, base.policy),
            Variant::RandomInterpolation => (Operator::Interpolate, NeighborPolicy::InClassRandom),
            Variant::Interpolation => (Operator::Interpolate, NeighborPolicy::InClassNearest),
            Variant::Extrapolation => (Operator::Extrapolate, NeighborPolicy::InClassNearest),
        };
        Some(AugmentConfig {
            operator,
            policy,
            ..base.clone()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyConfig {
    #[serde(flatten)]
    pub model: ClassifierConfig,
    pub variants: Vec<Variant>,
    pub runs: usize,
    /// Cross-validation folds; used when the dataset has no separate test set.
    pub folds: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            model: ClassifierConfig::default(),
            variants: Variant::ALL.to_vec(),
            runs: 10,
            folds: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    /// Sample ids `(j, k)` of the two parents.
    pub pair: (usize, usize),
    pub operator: Operator,
    pub lambdas: Vec<f64>,
}

pub fn default_lambda_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            pair: (0, 1),
            operator: Operator::Interpolate,
            lambdas: default_lambda_grid(),
        }
    }
}

/// Everything one experiment needs, read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub experiment_id: String,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub data: DataConfig,
    pub autoencoder: AutoencoderConfig,
    pub augment: AugmentConfig,
    pub classify: ClassifyConfig,
    pub sweep: SweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment_id: "experiment".into(),
            seed: 0,
            out_dir: PathBuf::from("out"),
            data: DataConfig::default(),
            autoencoder: AutoencoderConfig::default(),
            augment: AugmentConfig::default(),
            classify: ClassifyConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config = Self::parse(text)?;
        config.validate()?;
        Ok(config)
    }

    fn parse(text: &str) -> Result<Self> {
        let raw: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let config: Self = raw
            .clone()
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        // serde cannot reject unknown keys through the flattened sections,
        // so compare against the canonical rendering instead
        let canonical = toml::Table::try_from(&config).map_err(|e| Error::Config(e.to_string()))?;
        let mut unknown = Vec::new();
        unknown_keys(&raw, &canonical, "", &mut unknown);
        if !unknown.is_empty() {
            return Err(Error::Config(format!("unknown config keys: {}", unknown.join(", "))));
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        let mut config = Self::parse(&text)?;
        // data paths are relative to the config file
        if let Some(dir) = path.parent() {
            let csv = &mut config.data.csv;
            if csv.train.is_relative() && !csv.train.as_os_str().is_empty() {
                csv.train = dir.join(&csv.train);
            }
            if let Some(t) = csv.test.as_mut().filter(|t| t.is_relative()) {
                *t = dir.join(&*t);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Canonical rendering with the output directory blanked, so the same
    /// experiment written to two places has the same fingerprint.
    pub fn fingerprint_text(&self) -> Result<String> {
        Self {
            out_dir: PathBuf::new(),
            ..self.clone()
        }
        .to_toml()
    }

    pub fn validate(&self) -> Result<()> {
        let ae = &self.autoencoder;
        if ae.hidden == 0 {
            return Err(Error::Config("autoencoder.hidden must be positive".into()));
        }
        if !(0.0..1.0).contains(&ae.dropout) {
            return Err(Error::Config(format!(
                "autoencoder.dropout must lie in [0, 1), got {}",
                ae.dropout
            )));
        }
        if ae.updates == 0 {
            return Err(Error::Config("autoencoder.updates must be positive".into()));
        }
        if ae.train.batch_size == 0 {
            return Err(Error::Config("autoencoder.train.batch_size must be positive".into()));
        }
        let cl = &self.classify;
        if cl.model.hidden == 0 || cl.model.updates == 0 || cl.model.batch_size == 0 {
            return Err(Error::Config(
                "classify.hidden, classify.updates and classify.batch_size must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&cl.model.dropout) {
            return Err(Error::Config(format!(
                "classify.dropout must lie in [0, 1), got {}",
                cl.model.dropout
            )));
        }
        if cl.variants.is_empty() {
            return Err(Error::Config("classify.variants must not be empty".into()));
        }
        if cl.runs < 2 {
            return Err(Error::Config("classify.runs must be at least 2".into()));
        }
        if self.sweep.lambdas.is_empty() {
            return Err(Error::Config("sweep.lambdas must not be empty".into()));
        }
        self.augment
            .validate()
            .map_err(|e| Error::Config(format!("augment: {e}")))?;
        if self.data.kind == DataKind::Csv {
            let csv = &self.data.csv;
            if csv.train.as_os_str().is_empty() {
                return Err(Error::Config("data.csv.train is required for csv data".into()));
            }
            for p in std::iter::once(&csv.train).chain(csv.test.as_ref()) {
                if !p.exists() {
                    return Err(Error::Config(format!("data file {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }
}
