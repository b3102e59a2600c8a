use thiserror::Error;

/// Errors produced anywhere in the laboratory.
///
/// Each variant maps onto one of the CLI exit-code classes through
/// [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("SVD did not converge after {sweeps} sweeps (residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("condition number is undefined for the zero matrix")]
    UndefinedCondition,

    #[error("integer overflow: {0}")]
    Overflow(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }

    /// Process exit code: 2 for bad input, 3 for exhausted budgets, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Parse { .. } | Error::Overflow(_) | Error::UndefinedCondition => 2,
            Error::Resource(_) => 3,
            Error::NoConvergence { .. } | Error::Io(_) => 1,
        }
    }
}
