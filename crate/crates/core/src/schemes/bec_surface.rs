//! Atoms in a magnetic microtrap next to a cantilever, coupled by the surface potential.

use serde::Serialize;

use crate::coupling::{CoupledPair, CouplingBudget};
use crate::error::{ensure, Result};
use crate::physcore::{Environment, OscillatorSpec, TrapKind, TrapSpec, HBAR};
use crate::trapscape::{SurfaceTrapFamily, TrapAnalysis};

/// How the trap is positioned relative to the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Placement {
    /// Grid value of the family (actual distance when re-tuned, bare distance otherwise), m.
    Distance(f64),
    /// Distance chosen so the barrier is this many hbar omega_a.
    Barrier(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BecSurfaceParams {
    pub family: SurfaceTrapFamily,
    pub placement: Placement,
    pub oscillator: OscillatorSpec,
    pub n_atoms: u64,
    pub environment: Environment,
    /// rad/s
    pub atomic_decoherence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BecSurfaceReport {
    pub analysis: TrapAnalysis,
    /// `None` when the trap has vanished at this placement.
    pub budget: Option<CouplingBudget>,
    /// Grid value actually used, m.
    pub placement_value: f64,
}

impl BecSurfaceParams {
    pub fn placement_value(&self) -> Result<f64> {
        match self.placement {
            Placement::Distance(d) => Ok(d),
            Placement::Barrier(u0) => self.family.distance_for_barrier(u0),
        }
    }
}

pub fn bec_surface_budget(p: &BecSurfaceParams) -> Result<BecSurfaceReport> {
    let x = p.placement_value()?;
    let pot = p.family.potential_at(x)?;
    let analysis = pot.analyze()?;
    let budget = match &analysis.bound {
        None => None,
        Some(b) => {
            let pair = CoupledPair {
                atom: p.family.atom.clone(),
                n_atoms: p.n_atoms,
                trap: TrapSpec::new(pot.bare_frequency, pot.bare_minimum, TrapKind::Magnetic)?,
                oscillator: p.oscillator.clone(),
                potential: p.family.surface,
                equilibrium_distance: b.distance,
                environment: p.environment,
                atomic_decoherence: p.atomic_decoherence,
                compensation_factor: 1.0,
            };
            Some(pair.budget()?)
        }
    };
    Ok(BecSurfaceReport {
        analysis,
        budget,
        placement_value: x,
    })
}

/// Cloud displacement after time of flight for a coherent c.o.m. state |alpha> of
/// N atoms released from a trap of frequency omega_a: `sqrt(2 hbar omega_a / m N) alpha t`.
pub fn tof_detection_amplitude(
    n_atoms: f64,
    omega_a: f64,
    atom_mass: f64,
    alpha: f64,
    t_tof: f64,
) -> Result<f64> {
    ensure(n_atoms > 0.0 && omega_a > 0.0 && atom_mass > 0.0, || {
        "atom number, trap frequency and mass must be positive".into()
    })?;
    ensure(alpha >= 0.0 && t_tof >= 0.0, || {
        "alpha and time of flight must be >= 0".into()
    })?;
    Ok((2.0 * HBAR * omega_a / (atom_mass * n_atoms)).sqrt() * alpha * t_tof)
}
