use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0} outside the domain of the function")]
    Domain(String),

    #[error("sample is empty")]
    EmptySample,

    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("optimizer did not converge after {iterations} iterations: {detail}")]
    NotConverged { iterations: usize, detail: String },

    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    #[error("quadrature did not reach tolerance {requested:e} (achieved {achieved:e})")]
    Quadrature { requested: f64, achieved: f64 },

    #[error("no sign change found after {doublings} bracket doublings")]
    Bracket { doublings: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
