use thiserror::Error;

pub type Result<T> = std::result::Result<T, DoneError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DoneError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid frequency distribution: {0}")]
    InvalidDistribution(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(DoneError::DimensionMismatch { expected, got })
    }
}
