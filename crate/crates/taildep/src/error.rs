use thiserror::Error;

/// Errors produced by the estimation and decomposition routines.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data violates a mathematical precondition (negative values,
    /// zero rows, non-square matrices, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// An argument is out of range (k >= n, levels outside (0,1), ...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// An estimation step degenerated (no exceedances above the threshold,
    /// zero diagonal entry, ...).
    #[error("degenerate estimation: {0}")]
    Degenerate(String),

    /// A numerical routine failed to converge; the message carries the
    /// last iterate.
    #[error("optimizer failure: {0}")]
    Optimizer(String),

    /// Intermediate quantities violate an invariant beyond tolerance,
    /// indicating corrupted input rather than rounding noise.
    #[error("internal consistency: {0}")]
    Inconsistent(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
