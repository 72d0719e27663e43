use thiserror::Error;

/// Errors raised by the estimator, the tests and the simulation harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("no records supplied")]
    Empty,

    #[error("x value at index {0} is not finite")]
    NonFiniteValue(usize),

    #[error("x and y have different lengths ({x} vs {y})")]
    LengthMismatch { x: usize, y: usize },

    #[error("sample too small: need at least {needed} observations, got {got}")]
    SampleTooSmall { needed: usize, got: usize },

    #[error("category code {code} out of range for {k_count} categories")]
    UnknownCategory { code: usize, k_count: usize },

    #[error("zero is not strictly inside the pseudo-value hull")]
    HullViolation,

    #[error("all pseudo-values are zero")]
    AllZero,

    #[error("root solver did not converge within {iters} iterations")]
    NoConvergence { iters: usize },

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("invalid probability vector: {0}")]
    InvalidProbabilityVector(String),

    #[error("null variance estimate is not strictly positive ({0})")]
    ZeroVariance(f64),

    #[error("invalid distribution spec: {0}")]
    InvalidSpec(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid tolerances: {0}")]
    InvalidTolerances(String),

    #[error("invalid replication count {got}: need at least {needed}")]
    InvalidReps { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
