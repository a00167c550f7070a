//! Error type shared by every module in the crate.

use thiserror::Error;

/// Errors raised by model construction, evaluation and solving.
#[derive(Debug, Clone, Error)]
pub enum ModelError {
    /// A configured parameter violates one of its invariants.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    /// An operation was called with an argument outside its domain.
    #[error("{op}: {reason}")]
    Domain { op: &'static str, reason: String },

    /// A computation produced a non-finite or otherwise unusable result.
    #[error("numerical failure in {op}: {reason}")]
    Numerical { op: &'static str, reason: String },

    /// The rotation solver ran out of iterations. The best bracket found so
    /// far is carried so callers can restart or report it.
    #[error(
        "solver did not converge after {iterations} iterations; best bracket [{bracket_lo}, {bracket_hi}]"
    )]
    NoConvergence {
        iterations: usize,
        bracket_lo: f64,
        bracket_hi: f64,
    },

    /// A sensitivity query crossed a regime boundary (finite vs. infinite
    /// rotation), where the rotation-length difference is undefined.
    #[error("regime change: {0}")]
    RegimeChange(String),
}

impl ModelError {
    pub(crate) fn invalid(name: &str, reason: impl Into<String>) -> Self {
        ModelError::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn domain(op: &'static str, reason: impl Into<String>) -> Self {
        ModelError::Domain {
            op,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, ModelError>;
