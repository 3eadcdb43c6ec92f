use thiserror::Error;

/// Errors produced by the embedding engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0} (must be >= 1)")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("unknown {kind} `{value}`")]
    Unknown { kind: &'static str, value: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("non-finite attention score {value} at ({row}, {col})")]
    NonFiniteScore { row: usize, col: usize, value: f64 },

    #[error("wave vectors have rank {rank}, need {needed}")]
    RankDeficient { rank: usize, needed: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
