//! Error type shared across the library.

use thiserror::Error;

/// Errors produced by simulator and estimator operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric or structural argument is out of its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Operand shapes do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A linear system that must be solved exactly is rank-deficient.
    #[error("singular system: {0}")]
    SingularSystem(String),

    /// A sounding measurement is too weak to factor reliably.
    #[error("low-SNR estimate: peak diagonal {peak:.3e} below noise floor {floor:.3e}")]
    LowSnr { peak: f64, floor: f64 },

    /// The operation is defined, but not for this configuration.
    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    /// A derived quantity collapsed to something unusable (e.g. a zero-norm
    /// precoder column).
    #[error("degenerate solution: {0}")]
    DegenerateSolution(String),

    /// A subspace operation was asked of a rank-zero measurement.
    #[error("undefined subspace: {0}")]
    UndefinedSubspace(String),

    /// An internal schedule or bookkeeping invariant was violated.
    #[error("internal consistency: {0}")]
    InternalConsistency(String),

    /// Frame construction or parsing failed.
    #[error("framing error: {0}")]
    Framing(String),

    /// Config file rejected, with the offending line.
    #[error("config error (line {line}): {message}")]
    Config { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
