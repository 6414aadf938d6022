use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("rank-one update denominator {denom:e} is not positive")]
    DegenerateUpdate { denom: f64 },
    #[error("matrix is numerically singular (pivot magnitude {pivot:e})")]
    SingularMatrix { pivot: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("logistic label must be 0 or 1, got {0}")]
    InvalidLabel(f64),
    #[error("non-finite iterate after block {t}")]
    NonFiniteIterate { t: u64 },
    #[error("empty mini-batch")]
    EmptyBatch,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("malformed csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
