use thiserror::Error;

use crate::record::RecordViolation;

/// Errors raised by the sketch, aggregator and supporting primitives.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid probability grid: {0}")]
    InvalidGrid(String),

    #[error("degenerate interpolation interval [{x0}, {x1}]")]
    DegenerateInterval { x0: f64, x1: f64 },

    #[error("probability {0} is outside the domain of the chosen scheme")]
    ProbabilityDomain(f64),

    #[error("non-finite observation {0}")]
    NonFinite(f64),

    #[error("observation {0} is not positive and cannot be log-transformed")]
    NonPositive(f64),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid record: {0}")]
    InvalidRecord(#[from] RecordViolation),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("output failed: {0}")]
    Output(String),
}

pub type Result<T> = std::result::Result<T, Error>;
