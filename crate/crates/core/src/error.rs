use thiserror::Error;

/// Errors raised by the calculators and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input is outside the domain of a formula (non-positive mass, negative temperature, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A potential was evaluated outside its declared validity range.
    #[error("distance {distance:e} m outside valid range [{min:e}, {max:e}] m")]
    OutOfRange { distance: f64, min: f64, max: f64 },

    /// The coupling curvature cancels the atomic trap.
    #[error(
        "trap vanished: coupling curvature {curvature:e} J/m^2 reaches the critical value {critical:e} J/m^2"
    )]
    TrapVanished { curvature: f64, critical: f64 },

    /// The small-amplitude anharmonic expansion predicts a non-positive frequency.
    #[error("amplitude {amplitude:e} m beyond validity of the anharmonic expansion")]
    AmplitudeBeyondValidity { amplitude: f64 },

    /// A parameter set leaves the regime a model is valid in.
    #[error("regime violation: {0}")]
    Regime(String),

    /// The truncated Fock space is too small for the state being evolved.
    #[error("Fock cutoff inadequate: top-level population {population:e} at cutoff {cutoff}; use a cutoff of at least {required}")]
    CutoffInadequate {
        cutoff: usize,
        population: f64,
        required: usize,
    },

    /// A fixed-step integrator was asked to take a step above its stability/accuracy bound.
    #[error("time step {step:e} s exceeds bound {bound:e} s")]
    StepBound { step: f64, bound: f64 },

    /// An iterative solver stopped before reaching its tolerance.
    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// Scenario file or parameter block failed validation.
    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Prefix the message with the operation that failed.
    pub fn context(self, what: &str) -> Self {
        match self {
            Error::Domain(m) => Error::Domain(format!("{what}: {m}")),
            Error::Regime(m) => Error::Regime(format!("{what}: {m}")),
            Error::Config(m) => Error::Config(format!("{what}: {m}")),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Domain(msg()))
    }
}
