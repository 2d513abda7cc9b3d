use thiserror::Error;

use crate::piecewise::SignPattern;

/// Errors produced by every module of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("evaluation point lies on a pole: |denominator| = {magnitude:e} <= {tol:e}")]
    Singularity { magnitude: f64, tol: f64 },

    #[error("sign pattern {0} has no piece")]
    UnreachablePattern(SignPattern),

    #[error("{count} pieces apply at the evaluation point (expected exactly one)")]
    AmbiguousPiece { count: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("program graph contains a cycle through node {0}")]
    Cycle(usize),

    #[error("did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("matrix is rank deficient: smallest singular value {sigma_min:e} <= {tol:e}")]
    RankDeficient { sigma_min: f64, tol: f64 },

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("search budget of {budget} nodes exceeded; retry with a smaller max_n")]
    BudgetExceeded { budget: u64 },

    #[error("instance {index} failed: {source}")]
    Instance {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
