use thiserror::Error;

/// Errors raised by the arm model, trajectory, energy and solver code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("time {t} outside horizon [{t0}, {tf}]")]
    OutOfHorizon { t: f64, t0: f64, tf: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mass matrix is numerically singular")]
    SingularMassMatrix,

    #[error("constraint {0} is not a continuous-time family")]
    NotContinuous(String),

    #[error("simpson quadrature needs an even number of intervals, got {0}")]
    OddIntervalCount(usize),

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),

    #[error("scenario `{name}` is invalid: {issues}")]
    InvalidScenario { name: String, issues: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
