use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid ensemble pattern: {0}")]
    InvalidPattern(String),

    #[error("unsupported unit conversion: {from} -> {to}")]
    UnsupportedUnits { from: String, to: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("basis parse error at line {line}: {msg}")]
    BasisParse { line: usize, msg: String },

    #[error("no basis functions for element {0}")]
    MissingElement(String),

    #[error("XYZ parse error at line {line}: {msg}")]
    Xyz { line: usize, msg: String },

    #[error("overlap matrix is near-singular: smallest eigenvalue {0:e}")]
    Conditioning(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("ERI tensor needs {bytes} bytes, limit is {limit}")]
    TooLarge { bytes: usize, limit: usize },

    #[error("SCF not converged after {0} iterations")]
    ScfNotConverged(usize),

    #[error("photon displacement optimization not converged after {iterations} macro-iterations")]
    QcNotConverged { iterations: usize, trace: Vec<f64> },

    #[error("ensemble macro-iteration not converged after {iterations} iterations")]
    EnsembleNotConverged { iterations: usize, trace: Vec<f64> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
