use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("resolution {resolution} too coarse: {reason}")]
    TooCoarse { resolution: usize, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("mask or partition belongs to a different domain")]
    DomainMismatch,

    #[error("empty subdomain")]
    EmptySubdomain,

    #[error("part {label} is empty")]
    EmptyPart { label: usize },

    #[error("function is identically zero")]
    ZeroFunction,

    #[error("eigensolver did not converge after {iterations} iterations (best residual {best_residual:.3e})")]
    NoConvergence { iterations: usize, best_residual: f64 },

    #[error("discretization fault: {0}")]
    Discretization(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
