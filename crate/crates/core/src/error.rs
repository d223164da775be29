//! Error type shared by every module of the crate.

use thiserror::Error;

/// Failure modes of lattice construction, spectral transforms, and the
/// cubature engine.
#[derive(Debug, Error)]
pub enum CubatureError {
    /// A caller-supplied argument lies outside the supported domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A hard resource cap (lattice size, node budget) would be exceeded.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// The kernel Gram matrix or its spectrum is numerically unusable,
    /// typically because γ is too large for the node set or nodes coincide.
    #[error("ill-conditioned kernel system: {0}")]
    IllConditioned(String),

    /// The observed data carry no signal the empirical-Bayes criterion can
    /// use (all integrand values identical).
    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// The integrand returned a non-finite value at a node.
    #[error("integrand returned {value} at node index {index} ({point:?})")]
    EvaluationFailed {
        index: usize,
        value: f64,
        point: Vec<f64>,
    },
}

pub type Result<T> = std::result::Result<T, CubatureError>;
