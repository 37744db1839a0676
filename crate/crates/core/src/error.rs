use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum Error {
    /// A profile broke normalization or monotonicity. `index` is 1-based.
    #[error("invalid eigenvalue profile at index {index}: {reason}")]
    InvalidProfile { index: u64, reason: String },

    #[error("invalid problem dimensions: {0}")]
    InvalidDims(String),

    /// The truncation order search ran past 2^40.
    #[error("truncation order exceeds 2^40; the dimensions are pathological")]
    Overflow,

    #[error("incomplete gamma evaluation did not converge at a={a}, x={x}")]
    NonConvergence { a: f64, x: f64 },

    #[error("conditional chi-square moment underflowed at d={d}, r={r}")]
    Underflow { d: u64, r: f64 },

    #[error("no calibration entry for {0}")]
    MissingCalibration(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("infeasible prior specification: {0}")]
    InfeasibleSpec(String),

    #[error("exact enumeration too large (p={p}, s={s})")]
    EnumerationTooLarge { p: u64, s: u64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("calibration needs at least {needed} replications, got {reps}")]
    InsufficientReps { reps: u64, needed: u64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
