use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by tree construction, measure validation and the
/// discrepancy kernels.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid node id {id} (tree has {len} nodes)")]
    InvalidNode { id: usize, len: usize },

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("unsorted input: {0}")]
    Unsorted(&'static str),

    #[error("mass imbalance {0:e} exceeds tolerance")]
    MassImbalance(f64),

    #[error("transport plan marginals do not match measures: {0}")]
    MarginalMismatch(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
