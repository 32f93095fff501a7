//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors surfaced by constructors and operations.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A scalar or integer parameter is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Vector-valued inputs disagree in dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A Hermite degree exceeds the evaluation cap.
    #[error("degree {degree} exceeds the cap {cap}")]
    DegreeCapExceeded { degree: usize, cap: usize },

    /// A set fails the `A = -A` symmetry requirement.
    #[error("set is not origin-symmetric: {0}")]
    NotSymmetric(String),

    /// Two sets were required to share a Gaussian measure but do not.
    #[error("measure mismatch: {left} vs {right} (tolerance {tol})")]
    MeasureMismatch { left: f64, right: f64, tol: f64 },

    /// A truncated spectral sum could not certify the requested tolerance.
    #[error("tail bound {bound} exceeds the requested tolerance {tol}; increase the degree cap")]
    TailBoundTooLarge { bound: f64, tol: f64 },

    /// Numerical quadrature failed to converge to its target.
    #[error("quadrature did not converge: {0}")]
    QuadratureFailed(String),

    /// A textual set description could not be parsed.
    #[error("cannot parse set description: {0}")]
    ParseError(String),

    /// A requested configuration cannot be represented exactly.
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
