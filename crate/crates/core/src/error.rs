//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid input: malformed model, bad parameter, wrong shape.
    #[error("input error: {0}")]
    Input(String),

    /// A vector or matrix has the wrong dimension for the model.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Two partitions were expected to share the same carrier atoms.
    #[error("carrier mismatch: {0}")]
    CarrierMismatch(String),

    /// Numerical failure (NaN, divergence, failed factorization).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Accumulated matrix too close to singular to invert reliably.
    #[error("ill-conditioned model: condition estimate {cond:.3e}")]
    IllConditioned { cond: f64 },

    /// Operation not defined for this model/profile combination.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// The mean-shift step is undefined (zero density at the query point).
    #[error("shift undefined: zero density at the query point")]
    ShiftUndefined,

    /// Critical-point classification requested at a non-critical point.
    #[error("not a critical point: |Df|/f = {relative_gradient:.3e} exceeds tolerance {tol:.3e}")]
    NotCritical { relative_gradient: f64, tol: f64 },

    /// The density is numerically flat over an interval (non-Morse).
    #[error("degenerate density: flat interval [{lo}, {hi}]")]
    DegenerateDensity { lo: f64, hi: f64 },

    /// Brute-force enumeration refused for matrices above the factorial guard.
    #[error("permutation guard: {size} rows exceed brute-force limit {limit}")]
    PermutationGuard { size: usize, limit: usize },

    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    /// CSV (de)serialization failure.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad inputs rather than numerical trouble.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::Input(_)
                | Error::DimensionMismatch { .. }
                | Error::CarrierMismatch(_)
                | Error::Unsupported(_)
                | Error::PermutationGuard { .. }
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
