use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the augmentation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    Dimension {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid length: {0}")]
    InvalidLength(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid loss value {0}")]
    InvalidLoss(f64),

    #[error("no in-class neighbors for sample {index} (class {label} has a single member)")]
    NoNeighbors { index: usize, label: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn dim(expected: usize, actual: usize, context: &'static str) -> Self {
        Error::Dimension {
            expected,
            actual,
            context,
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end, one per error class.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => 2,
            Error::Io { .. } => 3,
            Error::Parse { .. } => 4,
            Error::Checkpoint(_) => 5,
            Error::Parameter(_) | Error::InvalidLength(_) | Error::InvalidLoss(_) => 6,
            Error::Dimension { .. } => 7,
            Error::InsufficientData(_) | Error::EmptyInput(_) | Error::NoNeighbors { .. } => 8,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
