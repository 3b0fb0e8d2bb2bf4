use thiserror::Error;

/// Errors produced by the retention and cost engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input violated a model invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A numeric argument was outside the domain of a cost or threshold formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// The exact engine was asked for a chain larger than it enumerates.
    #[error("capacity error: {dipoles} dipoles exceeds the exact-mode cap of {cap}; use Monte Carlo")]
    Capacity { dipoles: usize, cap: usize },

    /// The Markov chain has no finite mean absorption time.
    #[error("model error: {0}")]
    Model(String),

    /// Two configurations have no finite, nonnegative cost crossover.
    #[error("degenerate threshold: {0}")]
    DegenerateThreshold(String),

    /// Every Monte Carlo trial hit the step cap.
    #[error("estimate error: {0}")]
    Estimate(String),

    /// A linear solve or residual check failed.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
