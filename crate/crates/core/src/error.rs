use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("data length {len} does not match shape {shape:?} (expected {expected})")]
    DataLength {
        shape: Vec<usize>,
        len: usize,
        expected: usize,
    },

    #[error("non-finite value at linear index {0}")]
    NonFinite(usize),

    #[error("mode {mode} out of range for order {order}")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("split point {split} out of range for order {order}")]
    SplitOutOfRange { split: usize, order: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid permutation {0:?}")]
    InvalidPermutation(Vec<usize>),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("threshold eps = {0} outside (0, 1]")]
    InvalidThreshold(f64),

    #[error("svd did not converge after {sweeps} sweeps")]
    SvdNoConvergence { sweeps: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular within-class scatter; use a ridge > 0")]
    SingularScatter,

    #[error("holdout split leaves class {0} without training samples")]
    EmptyTrainingClass(usize),

    #[error("format error: {0}")]
    Format(String),

    #[error("{path}: {message}")]
    Ingest { path: PathBuf, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
