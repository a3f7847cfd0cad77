//! Crate-wide error type. Frequencies inside error messages are reported in
//! rad/s because errors are raised below the unit-conversion boundary.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A constructor or operation received a value outside its domain.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The waveguide mode count exceeds the dynamical-matrix cap.
    #[error("too many waveguide modes: {count} exceeds cap {cap}")]
    TooManyModes { count: usize, cap: usize },

    /// Mismatched array lengths between coupled inputs.
    #[error("dimension mismatch in `{context}`: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    /// The system matrix was singular (or numerically singular) at a probe
    /// frequency. Carries the frequency and a condition-number estimate.
    #[error(
        "singular system matrix at omega = {omega:.6e} rad/s \
         (condition estimate {condition:.3e})"
    )]
    SingularSolve { omega: f64, condition: f64 },

    /// Eigenvalue matching between two drive powers found two candidates at
    /// nearly the same distance; both are listed so the caller can force one.
    #[error(
        "ambiguous mode matching near {target:.6e} rad/s: candidates at \
         {first:.6e} and {second:.6e} rad/s are within 1e-3 of each other \
         in the matching metric"
    )]
    MatchingAmbiguity { target: f64, first: f64, second: f64 },

    /// Least-squares basis lost full column rank; the two most collinear
    /// columns are named.
    #[error(
        "rank-deficient noise basis: columns {first} and {second} are \
         collinear (smallest singular value {sigma_min:.3e})"
    )]
    RankDeficient {
        first: usize,
        second: usize,
        sigma_min: f64,
    },

    /// Non-finite sample encountered in externally supplied data.
    #[error("non-finite value in `{context}` at index {index}")]
    NonFinite { context: &'static str, index: usize },

    /// An iterative numerical routine failed to converge.
    #[error("{routine} failed to converge: {detail}")]
    NoConvergence {
        routine: &'static str,
        detail: String,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
