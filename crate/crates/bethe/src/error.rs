//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, inference, and learning routines.
#[derive(Debug, Error)]
pub enum BetheError {
    /// Edge list failed validation (self-loop, duplicate, out-of-range, or unsorted).
    #[error("invalid edge list: {0}")]
    InvalidEdges(String),

    /// Exhaustive enumeration refused for models above the state-space cap.
    #[error("node count {n} exceeds enumeration capacity {max}")]
    CapacityExceeded { n: usize, max: usize },

    /// A vector argument does not match the graph it is paired with.
    #[error("{what}: expected length {expected}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// Two operands refer to different graphs.
    #[error("operands refer to different graphs")]
    GraphMismatch,

    /// Pseudomarginals violate the local-consistency box constraints.
    #[error("pseudomarginals violate local consistency: {0}")]
    Inconsistent(String),

    /// A probability cell sits at or below the clamp floor, so logarithmic
    /// quantities (gradient, Hessian, parameter recovery) are undefined.
    #[error("pseudomarginal at domain boundary: {coordinate} = {value:e}")]
    Boundary { coordinate: String, value: f64 },

    /// A matrix expected to be symmetric is not.
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    /// Message values left the representable range during belief propagation.
    #[error("non-finite message values at iteration {iteration}")]
    MessageOverflow { iteration: usize },

    /// A belief normalizer vanished.
    #[error("zero normalizer in {0}")]
    ZeroNormalizer(&'static str),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// An operation that needs converged fixed points found none.
    #[error("no converged iterations available")]
    NoConvergedIterations,

    #[error("window {window} exceeds trajectory length {len}")]
    WindowTooLarge { window: usize, len: usize },

    /// Scalar argument outside the documented domain.
    #[error("{what} = {value} outside domain {domain}")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, BetheError>;
