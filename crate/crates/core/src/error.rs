//! Error type shared by all library modules.

use thiserror::Error;

/// Failures reported by the calibration library.
#[derive(Debug, Error)]
pub enum Error {
    /// An iterative eigen-solver did not converge within its sweep budget.
    #[error("eigen-decomposition did not converge after {sweeps} sweeps")]
    EigNoConvergence { sweeps: usize },

    /// A linear system was singular; `rank` is the numeric rank found.
    #[error("rank-deficient system: numeric rank {rank} of {dim}")]
    RankDeficient { rank: usize, dim: usize },

    /// A 4×4 matrix was not an element of se(3).
    #[error("matrix is not a twist: {reason}")]
    NotATwist { reason: String },

    /// The logarithm was requested for a rotation too close to angle π.
    #[error("rotation angle {angle} rad is too close to pi for the logarithm")]
    NearPi { angle: f64 },

    /// Inputs of incompatible sizes were combined.
    #[error("dimension mismatch: {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A residual could not be formed because the estimate is too far from the data.
    #[error("sample {sample}: estimate too far from measurement (relative rotation near pi)")]
    InitTooFar { sample: usize },

    /// A solver step failed at the given iteration.
    #[error("iteration {iteration}: {source}")]
    Step {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    /// Rejection sampling could not satisfy the validity rules.
    #[error("validity rules infeasible: no acceptable configuration after {draws} draws")]
    InfeasibleRules { draws: usize },

    /// The SDP solution carries no usable rank-one component.
    #[error("degenerate SDP solution: leading eigenvalue {lambda} is not positive")]
    DegenerateSolution { lambda: f64 },

    /// A sphere fit had too little geometric support.
    #[error("degenerate sphere fit: design rank {rank} < 4")]
    DegenerateSphere { rank: usize },

    /// A per-posture computation failed.
    #[error("posture {index}: {source}")]
    Posture {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    /// An input violated a documented precondition.
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    /// Whether the failure stems from invalid input (as opposed to a
    /// numerical failure on valid input).
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Dimension { .. } | Error::Invalid(_) | Error::InfeasibleRules { .. } | Error::NotATwist { .. } => true,
            Error::Step { source, .. } | Error::Posture { source, .. } => source.is_input_error(),
            _ => false,
        }
    }
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;
