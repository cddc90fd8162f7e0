use thiserror::Error;

/// Errors raised by meshing, assembly, solves, analytic evaluation and configuration.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("mesh invariant violated: {0}")]
    Geometry(String),

    #[error("degenerate cell {cell} (signed area {area:e})")]
    DegenerateCell { cell: usize, area: f64 },

    #[error("point ({x}, {y}) is not covered by the mesh")]
    NotFound { x: f64, y: f64 },

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    Solver { iterations: usize, residual: f64 },

    #[error("step {step} failed: {source}")]
    Step { step: usize, source: Box<Error> },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("series truncation: {0}")]
    Truncation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("configuration error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// True when the root cause is a linear solver failure.
    pub fn is_solver(&self) -> bool {
        match self {
            Error::Solver { .. } => true,
            Error::Step { source, .. } => source.is_solver(),
            _ => false,
        }
    }
}
