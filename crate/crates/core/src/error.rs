use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not positive definite ({context}): smallest eigenvalue {min_eigenvalue:e}")]
    NotPositiveDefinite { context: String, min_eigenvalue: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("initial asset value {index} is not strictly positive ({value})")]
    InvalidInitialValue { index: usize, value: f64 },

    #[error("asset value {index} is not strictly positive ({value})")]
    NonPositiveValue { index: usize, value: f64 },

    #[error("weights sum to {sum}, expected 1 within {tolerance:e}")]
    WeightsDoNotSumToOne { sum: f64, tolerance: f64 },

    #[error("invalid preferences: {0}")]
    InvalidPreferences(String),

    #[error("decomposition not applicable: {0}")]
    NotApplicable(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: cell {column} is not numeric: {cell:?}")]
    NonNumericCell {
        line: usize,
        column: usize,
        cell: String,
    },

    #[error("date mismatch between return files: {0}")]
    DateMismatch(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
