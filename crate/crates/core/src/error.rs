use thiserror::Error;

/// Errors raised by game construction, oracles and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    /// Inconsistent shapes or malformed structural input.
    #[error("structural error: {0}")]
    Structural(String),

    /// A standing assumption needed by the requested computation fails.
    #[error("assumption violated ({assumption}): {detail}")]
    AssumptionViolation { assumption: &'static str, detail: String },

    /// No equilibrium could be certified for the instance.
    #[error("no certified solution: {0}")]
    NoCertifiedSolution(String),

    /// The inner static-game solve of a retraining step did not converge.
    #[error("inner solve failed after {iterations} iterations (residual {residual:e})")]
    InnerSolveFailure { iterations: usize, residual: f64 },

    /// The loss model does not support the requested operation.
    #[error("capability error: {0}")]
    Capability(String),

    /// A step size outside the guaranteed regime was rejected in strict mode.
    #[error("step size {value:e} outside the guaranteed regime (bound {bound:e}): {rule}")]
    StepSize { value: f64, bound: f64, rule: &'static str },

    /// Invalid solver or schedule configuration.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, GameError>;

pub(crate) fn structural(msg: impl Into<String>) -> GameError {
    GameError::Structural(msg.into())
}
