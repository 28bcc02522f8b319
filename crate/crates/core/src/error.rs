use std::fmt;

/// Coarse classification used for CLI exit codes and the C ABI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Numerical,
    Io,
}

impl fmt::Display for ErrorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorClass::Input => "input",
            ErrorClass::Numerical => "numerical",
            ErrorClass::Io => "io",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("{what} is singular at {at}")]
    SingularPoint { what: &'static str, at: f64 },

    #[error("quadrature did not converge: last estimates {previous:e} and {last:e}")]
    QuadratureNonConvergence { previous: f64, last: f64 },

    #[error("circulant embedding has negative eigenvalue {eigenvalue:e} at index {index}")]
    EmbeddingFailure { eigenvalue: f64, index: usize },

    #[error("covariance Gram matrix is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPositiveSemidefinite { eigenvalue: f64 },

    #[error("grid of {n} steps is too large for dense factorization")]
    GridTooLarge { n: usize },

    #[error("collocation system is ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("collocation residual {residual:e} exceeds {limit:e}")]
    ResidualNotMet { residual: f64, limit: f64 },

    #[error("numerical differentiation unstable at t = {at}")]
    DifferentiationUnstable { at: f64 },

    #[error("budget root bracket exhausted at [{lo:e}, {hi:e}]")]
    BracketExhausted { lo: f64, hi: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter { .. }
            | Error::Parse { .. }
            | Error::GridMismatch(_)
            | Error::SingularPoint { .. } => ErrorClass::Input,
            Error::Io(_) => ErrorClass::Io,
            _ => ErrorClass::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
