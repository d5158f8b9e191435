use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point outside the domain: {0}")]
    Domain(String),

    #[error("series truncation failed: {0}")]
    Truncation(String),

    #[error("measure mass condition violated: {0}")]
    MassCondition(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate time t = {0}: the annulus has collapsed to the punctured disk")]
    DegenerateTime(f64),

    #[error("integration hit the boundary guard at t = {t}")]
    GuardHit { t: f64 },

    #[error("integration step failure at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("curve sampling too coarse: {0}")]
    SamplingTooCoarse(String),
}

impl Error {
    /// True for errors raised by the ODE integrator rather than by bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::GuardHit { .. } | Error::StepFailure { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
