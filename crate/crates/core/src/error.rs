//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong when constructing or running an experiment.
///
/// Numeric payloads are carried as `f64` regardless of the scalar type the
/// caller works in, so the error type stays object-simple and comparable.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("probabilities must sum to 1 within {tol} (got sum {sum})")]
    NotNormalized { sum: f64, tol: f64 },

    #[error("probability out of [0, 1] at index {index}: {value}")]
    ProbabilityOutOfRange { index: usize, value: f64 },

    #[error("state vector must have unit norm (squared norm {norm_sq})")]
    NotUnitNorm { norm_sq: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("{op} is only defined for m = 2 (got m = {m})")]
    NotTwoDimensional { op: &'static str, m: usize },

    #[error("parameter {value} outside the encoding domain [{lo}, {hi}]")]
    OutsideDomain { value: f64, lo: f64, hi: f64 },

    #[error("Fisher information diverges at the endpoint ω = {omega} for this encoding")]
    EndpointSingularity { omega: f64 },

    #[error("tabulated encoding needs ≥ 2 nodes with strictly increasing ω and μ ∈ [0, 1]")]
    BadTable,

    #[error("encoding is not invertible: {why}")]
    NotInvertible { why: &'static str },

    #[error("empty input: {what}")]
    Empty { what: &'static str },

    #[error("invalid parameter: {what}")]
    InvalidParameter { what: String },
}

impl Error {
    /// Convenience constructor for ad-hoc parameter validation.
    pub fn invalid(what: impl Into<String>) -> Self {
        Error::InvalidParameter { what: what.into() }
    }
}
