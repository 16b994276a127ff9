use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the signature-kernel library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("truncation level mismatch: {left} vs {right}")]
    LevelMismatch { left: usize, right: usize },

    #[error("non-finite value at point {point}, coordinate {coord}")]
    NonFinite { point: usize, coord: usize },

    #[error("sequence has no points")]
    EmptySequence,

    #[error("empty sample set")]
    EmptySampleSet,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("size guard exceeded: {what} needs {needed}, cap is {cap}")]
    GuardExceeded {
        what: &'static str,
        needed: f64,
        cap: f64,
    },

    #[error("negative diagonal level value {value} at level {level}")]
    NegativeLevel { level: usize, value: f64 },

    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {gap}")]
    Asymmetric { i: usize, j: usize, gap: f64 },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("duplicate sequence id `{0}`")]
    DuplicateId(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
