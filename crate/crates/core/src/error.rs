use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid norm exponent p = {0} (need p >= 1)")]
    InvalidNorm(f64),

    #[error("input must have zero mean, got mean {mean:e} (tolerance {tol:e})")]
    NonZeroMean { mean: f64, tol: f64 },

    #[error("argument {value} outside (-1, 1): loss of positivity")]
    Domain { value: f64 },

    #[error("field not admissible: |phi| = {max_abs} at cell {index} (required < {bound})")]
    Inadmissible {
        max_abs: f64,
        index: usize,
        bound: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("PSD solver did not converge in {iterations} iterations (residual {residual:e}, target {target:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        target: f64,
    },

    #[error("line search failed after {evaluations} evaluations: {reason}")]
    LineSearch { evaluations: usize, reason: String },

    #[error("step {step} at t = {t}: {quantity} = {value:e} violates bound {bound:e}")]
    Assertion {
        step: usize,
        t: f64,
        quantity: &'static str,
        value: f64,
        bound: f64,
    },

    #[error("time step {dt:e} below floor {dt_min:e} at t = {t}: {reason}")]
    StepTooSmall {
        t: f64,
        dt: f64,
        dt_min: f64,
        reason: String,
    },

    #[error("observer aborted the run: {0}")]
    Observer(String),
}

impl Error {
    /// True for failures the adaptive driver may recover from by shrinking the step.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::NonConvergence { .. } | Error::LineSearch { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
