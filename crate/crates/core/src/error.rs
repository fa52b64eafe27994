use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("no convergence after {iterations} iterations: {what}")]
    NonConvergence { what: String, iterations: usize },
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Range(_) => "range",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Quadrature(_) => "quadrature",
            Error::Numerical(_) => "numerical",
            Error::Config(_) => "config",
        }
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
