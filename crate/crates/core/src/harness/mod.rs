//! Experiment orchestration behind the command-line tool.

mod commands;
mod config;
mod svg;

pub use commands::*;
pub use config::{
    default_lambda_grid, AutoencoderConfig, BoundaryData, ClassifyConfig, CsvData, DataConfig,
    DataKind, ExperimentConfig, SinusoidData, SweepConfig, Variant,
};
pub use svg::{line_plot, Series};
