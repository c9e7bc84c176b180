use std::path::PathBuf;

use thiserror::Error;

use crate::dataset::Label;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}: file contains no data rows")]
    EmptyFile(PathBuf),
    #[error("row {row}, column {column}: cannot parse {value:?} as a finite number")]
    NonNumeric {
        row: u64,
        column: String,
        value: String,
    },
    #[error("row {row}, column {column}: label {value:?} is not a non-negative integer")]
    BadLabel {
        row: u64,
        column: String,
        value: String,
    },
    #[error("row {row}: ragged row with {found} fields, expected {expected}")]
    RaggedRow {
        row: u64,
        expected: usize,
        found: usize,
    },
    #[error("label column {0:?} not found in header")]
    UnknownColumn(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("class {0:?} has fewer than 2 members")]
    ClassTooSmall(Label),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("k = {k} is out of range for {n} instances")]
    KOutOfRange { k: usize, n: usize },
    #[error("no enemies: every instance carries the same label")]
    NoEnemies,
    #[error("candidate set is empty")]
    EmptyCandidates,
    #[error("editing removed all instances")]
    EditingRemovedAll,
    #[error("subset {subset}: {source}")]
    Subset {
        subset: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

/// Coarse error classes, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Algorithm,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. }
            | Error::EmptyFile(_)
            | Error::NonNumeric { .. }
            | Error::BadLabel { .. }
            | Error::RaggedRow { .. }
            | Error::UnknownColumn(_)
            | Error::Csv(_)
            | Error::Json(_)
            | Error::InvalidDataset(_)
            | Error::DimensionMismatch { .. }
            | Error::ClassTooSmall(_) => ErrorKind::Data,
            Error::InvalidParameter(_) | Error::ThreadPool(_) => ErrorKind::Usage,
            Error::KOutOfRange { .. }
            | Error::NoEnemies
            | Error::EmptyCandidates
            | Error::EditingRemovedAll => ErrorKind::Algorithm,
            Error::Subset { source, .. } => source.kind(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
