use std::path::PathBuf;

use thiserror::Error;

use crate::model::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Io,
    Data,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("signal too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("recording {id} failed validation: {violations:?}")]
    InvalidRecording { id: String, violations: Vec<Violation> },

    #[error("entry {entry}: file not found at {path}")]
    MissingFile { entry: String, path: PathBuf },

    #[error("entry {entry}: shape mismatch: {detail}")]
    ShapeMismatch { entry: String, detail: String },

    #[error("entry {entry}: unreadable: {detail}")]
    Format { entry: String, detail: String },

    #[error("inconsistent dataset: {0}")]
    Inconsistent(String),

    #[error("{} cell(s) failed: {}", .0.len(), summarize_failures(.0))]
    Batch(Vec<CellFailure>),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

/// One failed cell of a batch computation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellFailure {
    pub cell: String,
    pub message: String,
}

fn summarize_failures(failures: &[CellFailure]) -> String {
    failures
        .iter()
        .take(3)
        .map(|f| format!("{}: {}", f.cell, f.message))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => ErrorClass::Config,
            Error::Io { .. } | Error::Csv { .. } => ErrorClass::Io,
            Error::Json { source, .. } if source.is_io() => ErrorClass::Io,
            _ => ErrorClass::Data,
        }
    }
}
