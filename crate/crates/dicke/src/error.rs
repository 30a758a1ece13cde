use thiserror::Error;

/// Failure modes shared across the crate.
///
/// Domain errors (bad arguments, mismatched dimensions, too little data)
/// are separated from numerical failures so callers can map them to
/// different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not Hermitian within tolerance (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("matrix is not unitary within tolerance (defect {defect:.3e})")]
    NotUnitary { defect: f64 },

    #[error("parameter combination is singular: {0}")]
    SingularParameter(String),

    #[error("need at least {needed} levels, got {got}")]
    TooFewLevels { needed: usize, got: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("LAPACK routine {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },
}
