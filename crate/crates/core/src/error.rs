//! Crate error type.

use thiserror::Error;

/// Errors surfaced by geometry, oracle, solver and data operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A point lies outside the domain of a distance-generating function.
    #[error("domain violation: {0}")]
    Domain(String),

    /// No closed-form prox or diameter exists for a (geometry, set) pair.
    #[error("unsupported geometry/set combination: {0}")]
    UnsupportedCombination(String),

    /// A numeric precondition failed (NaN/Inf input, nonpositive step, ...).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Vector dimensions do not agree.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Invalid configuration (horizon, fraction, batch size, ...).
    #[error("config error: {0}")]
    Config(String),

    /// LIBSVM text could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// The reference solver did not converge within its iteration cap.
    #[error("reference solve failed: {0}")]
    ReferenceFailure(String),

    /// A solver step failed; the partial trace is flagged invalid.
    #[error("run aborted at iteration {iteration}: {reason}")]
    Aborted {
        iteration: usize,
        reason: String,
        partial: Box<crate::solver::RunTrace>,
    },

    /// An operation was asked to consume an incomplete trace.
    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
