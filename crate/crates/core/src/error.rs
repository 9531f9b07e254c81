use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller broke an operation's precondition (shape, length, empty input...).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("arithmetic error: {0}")]
    Arithmetic(String),

    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("non-finite loss {loss} at stage {stage}, step {step}")]
    NonFiniteLoss { stage: usize, step: usize, loss: f64 },

    #[error("reference solver did not converge: {0}")]
    ReferenceNotConverged(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Format(String),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable identifier used in machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Usage(_) => "usage",
            Error::Arithmetic(_) => "arithmetic",
            Error::InvalidSpec(_) => "invalid_spec",
            Error::Config(_) => "config",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::ReferenceNotConverged(_) => "reference_not_converged",
            Error::Io { .. } => "io",
            Error::Format(_) => "format",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
