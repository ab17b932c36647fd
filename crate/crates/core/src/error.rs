use thiserror::Error;

/// Errors raised by the discretization, reduction and driver layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("singular reduced system of size {0}")]
    SingularReducedSystem(usize),

    #[error("snapshot matrix carries no information (all columns are zero)")]
    EmptySnapshots,

    #[error("zero-norm denominator in {0}")]
    ZeroNorm(&'static str),

    #[error("time grid misalignment: {0}")]
    Alignment(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dims(context: &'static str, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            found,
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerical solvers (as opposed to bad input).
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. } | Error::SingularReducedSystem(_) | Error::ZeroNorm(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
