//! Atoms coupled to a carbon nanotube: surface force, charged tube, or a
//! current-carrying tube that forms the trap itself.

use serde::Serialize;

use crate::coupling::{assemble_budget, single_phonon_coupling, CouplingBudget};
use crate::error::{ensure, Result};
use crate::physcore::{AtomSpecies, Environment, OscillatorSpec};
use crate::potentials::{charged_tip_c4, CouplingPotential, PotentialKind};
use crate::schemes::bec_surface::{bec_surface_budget, BecSurfaceParams, Placement};
use crate::trapscape::{SurfaceTrapFamily, TrapAnalysis};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CntVariant {
    /// Surface potential `scale` x the bulk-conductor one.
    Cp { scale: f64 },
    /// Static charge on the tube polarizing the atom.
    Charged { charge: f64 },
    /// The tube carries the trapping current: the trap moves with it (epsilon = 1).
    CurrentCarrying,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CntParams {
    pub variant: CntVariant,
    pub atom: AtomSpecies,
    /// Bulk-conductor C4 for this species, J m^4.
    pub c4: f64,
    /// Atomic trap frequency (kept resonant while positioning), rad/s.
    pub trap_frequency: f64,
    /// Trap depth used to position the atoms, in hbar omega_a.
    pub barrier_quanta: f64,
    pub oscillator: OscillatorSpec,
    pub n_atoms: u64,
    pub environment: Environment,
    /// rad/s
    pub atomic_decoherence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CntReport {
    pub variant: CntVariant,
    pub budget: CouplingBudget,
    /// Coupling per unit epsilon, g0/eps and gN/eps, rad/s.
    pub g0_per_epsilon: f64,
    pub gn_per_epsilon: f64,
    /// Surface strength relative to the bulk CP potential (not for the current-carrying tube).
    pub effective_beta: Option<f64>,
    pub analysis: Option<TrapAnalysis>,
}

pub fn cnt_budget(p: &CntParams) -> Result<CntReport> {
    ensure(p.c4 > 0.0, || "C4 must be positive".into())?;
    let m = p.atom.mass;
    let w_m = p.oscillator.frequency;
    let unit = single_phonon_coupling(1.0, p.trap_frequency, w_m, m, p.oscillator.effective_mass)?;
    let surface = match p.variant {
        CntVariant::Cp { scale } => Some((
            CouplingPotential::new(PotentialKind::ScaledCasimirPolder {
                c4_jm4: p.c4,
                scale,
            })?,
            scale,
        )),
        CntVariant::Charged { charge } => Some((
            CouplingPotential::charged_tip_polarization(p.atom.static_polarizability, charge)?,
            charged_tip_c4(p.atom.static_polarizability, charge) / p.c4,
        )),
        CntVariant::CurrentCarrying => None,
    };
    let (budget, effective_beta, analysis) = match surface {
        Some((potential, beta)) => {
            let r = bec_surface_budget(&BecSurfaceParams {
                family: SurfaceTrapFamily {
                    atom: p.atom.clone(),
                    frequency: p.trap_frequency,
                    surface: potential,
                    gravity_on: false,
                    retune: true,
                },
                placement: Placement::Barrier(p.barrier_quanta),
                oscillator: p.oscillator.clone(),
                n_atoms: p.n_atoms,
                environment: p.environment,
                atomic_decoherence: p.atomic_decoherence,
            })?;
            let budget = r.budget.ok_or_else(|| {
                crate::Error::Regime("trap vanished at the requested barrier".into())
            })?;
            (budget, Some(beta), Some(r.analysis))
        }
        None => {
            let g0 = unit;
            let b = assemble_budget(
                1.0,
                g0,
                p.n_atoms,
                p.trap_frequency,
                w_m,
                &p.oscillator,
                &p.environment,
                p.atomic_decoherence,
            )?;
            (b, None, None)
        }
    };
    Ok(CntReport {
        variant: p.variant,
        g0_per_epsilon: unit,
        gn_per_epsilon: unit * (p.n_atoms as f64).sqrt(),
        budget,
        effective_beta,
        analysis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physcore::{angular_to_hz, hz_to_angular, SpeciesTable};

    fn params(variant: CntVariant, n: u64, f_hz: f64, mass: f64, gamma_a_hz: f64) -> CntParams {
        let w = hz_to_angular(f_hz);
        CntParams {
            variant,
            atom: SpeciesTable::builtin().get("Rb87").unwrap(),
            c4: 1.788e-55,
            trap_frequency: w,
            barrier_quanta: 8.0,
            oscillator: OscillatorSpec::new(mass, w, 1e6).unwrap(),
            n_atoms: n,
            environment: Environment::new(10e-3).unwrap(),
            atomic_decoherence: hz_to_angular(gamma_a_hz),
        }
    }

    #[test]
    fn collective_tuple() {
        let r = cnt_budget(&params(CntVariant::CurrentCarrying, 500, 20e3, 2e-20, 13.0)).unwrap();
        let gn = angular_to_hz(r.gn_per_epsilon);
        assert!((gn - 780.0).abs() < 0.35 * 780.0, "{gn}");
        let gm = angular_to_hz(r.budget.gamma_m_dec);
        assert!((gm - 210.0).abs() < 0.1 * 210.0, "{gm}");
        assert_eq!(r.budget.epsilon, 1.0);
        assert!(r.budget.strong_coupling);
    }

    #[test]
    fn single_atom_tuple() {
        let r = cnt_budget(&params(
            CntVariant::CurrentCarrying,
            1,
            250e3,
            2e-20 * 4.25 / 15.0,
            1.0,
        ))
        .unwrap();
        let g = angular_to_hz(r.g0_per_epsilon);
        assert!((g - 800.0).abs() < 0.35 * 800.0, "{g}");
    }

    #[test]
    fn surface_force_gives_percent_level_epsilon() {
        let r = cnt_budget(&params(
            CntVariant::Cp { scale: 0.06 },
            500,
            20e3,
            2e-20,
            13.0,
        ))
        .unwrap();
        let eps = r.budget.epsilon.abs();
        assert!((1e-3..1e-1).contains(&eps), "{eps}");
        assert_eq!(r.effective_beta, Some(0.06));
        // charging the tube strengthens the potential and the coupling
        let q = 2e-17;
        let c = cnt_budget(&params(
            CntVariant::Charged { charge: q },
            500,
            20e3,
            2e-20,
            13.0,
        ))
        .unwrap();
        assert!(c.effective_beta.unwrap() > 0.06);
        assert!(c.budget.epsilon.abs() > eps);
    }
}
