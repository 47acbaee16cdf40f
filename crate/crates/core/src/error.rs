use thiserror::Error;

use crate::Complex64;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// `n^-1 sum lambda_k^-2 <= 1`: no positive fixed point exists.
    #[error("z = {z} lies outside the bulk (mean inverse squared singular value {value} <= 1)")]
    OutsideBulk { z: Complex64, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed matrix file: {0}")]
    MalformedMatrix(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical corruption: {0}")]
    Numerical(String),

    #[error("grassmann algebra error: {0}")]
    Algebra(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
