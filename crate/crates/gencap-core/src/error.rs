use core::fmt;

/// Errors surfaced by the estimation pipeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// An argument is outside its documented domain.
    Domain(&'static str),
    /// Two vectors that must share a dimension do not.
    DimensionMismatch { expected: usize, got: usize },
    /// The hypothesis class is too large to enumerate; use a sampling estimator.
    Capacity { d: u32, k: Option<u32> },
    /// Exact integer arithmetic overflowed; use the log-domain variants.
    Overflow(&'static str),
    /// A log-partition triple was combined with the wrong normalization.
    NormalizationMismatch,
    /// The noise covariance is not symmetric positive definite.
    NotPositiveDefinite,
    /// log-sum-exp over an empty sequence.
    EmptySum,
    /// Requested estimator combination is not defined.
    Unsupported(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(what) => write!(f, "domain error: {what}"),
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::Capacity { d, k: Some(k) } => {
                write!(f, "hypothesis class too large to enumerate at d={d}, k={k}; use a sampling estimator")
            }
            Error::Capacity { d, k: None } => {
                write!(f, "hypothesis class too large to enumerate at d={d}; use a sampling estimator")
            }
            Error::Overflow(what) => write!(f, "integer overflow in {what}"),
            Error::NormalizationMismatch => {
                write!(f, "log-partition normalization does not match the requested assembly")
            }
            Error::NotPositiveDefinite => {
                write!(f, "noise covariance is not symmetric positive definite")
            }
            Error::EmptySum => write!(f, "log-sum-exp of an empty sequence"),
            Error::Unsupported(what) => write!(f, "unsupported: {what}"),
        }
    }
}

impl core::error::Error for Error {}
