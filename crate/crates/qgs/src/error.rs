use thiserror::Error;

/// Library-wide error type.
///
/// Construction errors (`InvalidParameter`, `ConstraintViolation`) mean the
/// caller supplied something the type can never represent; evaluation errors
/// (`Domain`, `ThresholdBelowSupport`) mean a valid object was queried outside
/// its support; the numeric variants report a solver or integrator that could
/// not reach its tolerance within budget.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    #[error("convergence failure: {0}")]
    ConvergenceFailure(String),

    #[error("threshold {threshold} lies below the support point {x0}")]
    ThresholdBelowSupport { threshold: f64, x0: f64 },

    #[error("observation counter overflowed past {0}")]
    CounterOverflow(u64),

    #[error("too few samples: got {n}, need at least {min}")]
    TooFewSamples { n: usize, min: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("mixture truncation tail mass {tail:e} exceeds allowed {bound:e}")]
    InvalidTruncation { tail: f64, bound: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
