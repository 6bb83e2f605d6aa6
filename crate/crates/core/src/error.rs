use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DdError {
    #[error("rotation axis must be a unit vector (|n| = {norm})")]
    NonUnitAxis { norm: f64 },

    #[error("rotation angle must be finite")]
    NonFiniteAngle,

    #[error("cannot compose an empty list of operators")]
    EmptyComposition,

    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("duration {0} must be non-negative")]
    NegativeDuration(f64),

    #[error("sequence level must be at least 1")]
    ZeroLevel,

    #[error("{0} requires an odd level, got {1}")]
    EvenLevel(&'static str, u32),

    #[error("pulse axis tilt too large: squared off-axis components sum to {0} (must be < 1)")]
    AxisTiltTooLarge(f64),

    #[error("bath width must be positive, got {0}")]
    NonPositiveBathWidth(f64),

    #[error("invalid value for `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },

    #[error("malformed sequence line {line}: {reason}")]
    SequenceParse { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, DdError>;

impl DdError {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        DdError::InvalidConfig {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
