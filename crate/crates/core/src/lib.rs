//! Coupling budgets, trap analysis and dynamics for ultracold atoms and ions
//! coupled to micro- and nanomechanical oscillators.

pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod gpe;
pub mod physcore;
pub mod potentials;
pub mod scenario;
pub mod schemes;
pub mod trapscape;

pub use error::{Error, Result};
