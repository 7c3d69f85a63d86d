//! Error type shared by all modules.

use crate::parabolic::EvolutionTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An operation was called on data that violates its contract
    /// (wrong boundary mode, mismatched shapes within one call, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A numeric argument is outside the admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two fields that must share a shape do not.
    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    /// The bracket inside the closed form for S(t) is nonpositive, so S
    /// ceased to exist before the requested time.
    #[error("singular time factor at t = {t}: bracket = {bracket:e}")]
    Singular { t: f64, bracket: f64 },

    /// The operation is defined only for a subset of inputs and this input
    /// is outside it (e.g. equilibrium of a non-constant growth rate).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// An ODE march produced a nonpositive state.
    #[error("unstable integration: state became nonpositive near t = {t}")]
    Unstable { t: f64 },

    /// An iterative solver ran out of iterations.
    #[error("no convergence after {iterations} iterations (last measure {last:e})")]
    NoConvergence {
        iterations: usize,
        last: f64,
        /// Per-iteration convergence measure, most recent last.
        history: Vec<f64>,
    },

    /// An explicit step was requested beyond the stability bound.
    #[error("time step {dt:e} exceeds the stability bound {bound:e} at t = {t}")]
    StepTooLarge { dt: f64, bound: f64, t: f64 },

    /// A time march failed partway; the snapshots recorded so far are kept.
    #[error("evolution aborted at step {step} (t = {t}): {source}")]
    Aborted {
        step: usize,
        t: f64,
        #[source]
        source: Box<Error>,
        partial: Box<EvolutionTrace>,
    },

    /// A verification routine refused its inputs because the stated
    /// preconditions do not hold.
    #[error("rejected: {0}")]
    Rejected(String),

    /// Malformed textual input (config strings, CSV grids, mu tables).
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics themselves, as opposed to bad
    /// inputs or I/O. The CLI maps these to a distinct exit code.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. }
                | Error::Unstable { .. }
                | Error::NoConvergence { .. }
                | Error::StepTooLarge { .. }
                | Error::Aborted { .. }
        )
    }
}
