use std::path::PathBuf;

use thiserror::Error;

use crate::space::Vector;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("vectors must have at least one entry")]
    EmptyVector,

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("invalid set descriptor: {0}")]
    InvalidDescriptor(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("step size {lambda} outside [0, {upper}] (2 * nu)")]
    ScheduleViolation { lambda: f64, upper: f64 },

    #[error("schedule table exhausted: index {index} requested, {len} entries available")]
    TableExhausted { index: usize, len: usize },

    #[error("unknown mapping `{0}`")]
    UnknownMapping(String),

    #[error("declared modulus violated: {0}")]
    ModulusViolation(String),

    #[error("iteration diverged at k = {k}")]
    Divergence { k: usize, last: Vector },

    #[error(
        "fixed-point iteration did not converge in {iterations} iterations (residual {residual:e})"
    )]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
