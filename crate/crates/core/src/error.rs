use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NonSymmetric { asymmetry: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("argument out of domain: {0}")]
    DomainError(String),

    #[error("non-finite value encountered at index {index}")]
    NonFinite { index: usize },

    #[error("k = {k} out of range for n = {n} (need 1 <= k <= n - 1)")]
    KOutOfRange { k: usize, n: usize },

    #[error("pivot order statistic is not positive ({value:e})")]
    NonPositivePivot { value: f64 },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("{method} did not converge after {iterations} iterations")]
    NotConverged {
        method: &'static str,
        iterations: usize,
        last: Vec<f64>,
    },

    #[error("fixed-point iterate became singular at iteration {iteration}")]
    SingularIterate { iteration: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("distance at index {index} is not positive")]
    NonPositiveDistance { index: usize },

    #[error("beta = {0} must lie strictly between 0 and 1")]
    BetaOutOfRange(f64),

    #[error("too few values: need at least {needed}, got {got}")]
    TooFewValues { needed: usize, got: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{failed} of {total} replications failed at n = {n}, above the cap of {cap}")]
    FailureCap {
        n: usize,
        failed: usize,
        total: usize,
        cap: usize,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
