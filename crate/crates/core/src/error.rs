use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid constitutive law: {0}")]
    InvalidLaw(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-positive density {value:e} at index {index}")]
    NonPositiveDensity { index: usize, value: f64 },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("non-finite value in {field} at index {index}")]
    NonFinite { field: &'static str, index: usize },

    #[error("time step {dt:e} fell below dt_min {dt_min:e}")]
    DtUnderflow { dt: f64, dt_min: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("records do not belong to one run: {0}")]
    MismatchedRecords(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),
}
