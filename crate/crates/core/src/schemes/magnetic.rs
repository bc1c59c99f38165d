//! Atomic spin coupled to a cantilever through a nanomagnet on its tip.

use serde::Serialize;

use crate::coupling::{assemble_budget, CouplingBudget};
use crate::error::{ensure, Error, Result};
use crate::physcore::{zero_point_amplitude, AtomSpecies, Environment, OscillatorSpec, HBAR, MU_B};
use crate::potentials::magnetic_dipole_gradient;

/// Reduction of the coupling when the mechanical Zeeman leg is part of a
/// two-photon transition with an auxiliary microwave field.
pub const TWO_PHOTON_REDUCTION: f64 = 3.0;

/// The Zeeman transition |F, m_from> <-> |F, m_to> driven by the oscillating field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ZeemanLeg {
    pub f: u32,
    pub m_from: i32,
    pub m_to: i32,
}

impl ZeemanLeg {
    /// |<F, m+1| F_x |F, m>| = sqrt(F(F+1) - m(m+1)) / 2 with m the lower of the pair.
    pub fn fx_matrix_element(&self) -> Result<f64> {
        let f = self.f as i32;
        ensure((self.m_from - self.m_to).abs() == 1, || {
            "the oscillating field drives Delta m = 1 transitions only".into()
        })?;
        ensure(self.m_from.abs() <= f && self.m_to.abs() <= f, || {
            format!("m outside [-F, F] for F = {f}")
        })?;
        let m = self.m_from.min(self.m_to) as f64;
        let ff = self.f as f64;
        Ok(0.5 * (ff * (ff + 1.0) - m * (m + 1.0)).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MagneticSchemeParams {
    pub atom: AtomSpecies,
    /// |mu_m|, J/T
    pub magnet_moment: f64,
    /// m
    pub distance: f64,
    pub cantilever: OscillatorSpec,
    /// B0 at the trap centre, T; `None` reports only the resonant value.
    pub bias_field: Option<f64>,
    pub leg: ZeemanLeg,
    pub two_photon: bool,
    pub n_atoms: u64,
    pub environment: Environment,
    /// rad/s
    pub atomic_decoherence: f64,
    /// Fraction of the static gradient left after the compensation magnets.
    pub static_gradient_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MagneticReport {
    pub budget: CouplingBudget,
    /// Oscillating field gradient G_m, T/m.
    pub gradient: f64,
    /// Static gradient the atoms feel after compensation, T/m.
    pub static_gradient: f64,
    /// b_qm, m
    pub zero_point_amplitude: f64,
    /// Larmor frequency at the configured bias field, rad/s.
    pub larmor_frequency: Option<f64>,
    /// B0 with omega_L = omega_m, T.
    pub resonance_b0: f64,
    /// pi / (2 g0 sqrt(N)), s
    pub transfer_time: f64,
}

pub fn larmor_frequency(g_f: f64, b0: f64) -> f64 {
    MU_B * g_f.abs() * b0 / HBAR
}

/// pi / (2 g0 sqrt(N)).
pub fn transfer_time(g0: f64, n_atoms: u64) -> Result<f64> {
    ensure(g0 > 0.0 && n_atoms >= 1, || {
        "transfer needs g0 > 0 and N >= 1".into()
    })?;
    Ok(std::f64::consts::PI / (2.0 * g0 * (n_atoms as f64).sqrt()))
}

pub fn magnetic_budget(p: &MagneticSchemeParams) -> Result<MagneticReport> {
    if let Some(b0) = p.bias_field {
        ensure(b0 > 0.0, || "bias field must be positive".into())?;
    }
    ensure((0.0..=1.0).contains(&p.static_gradient_residual), || {
        "static gradient residual must lie in [0, 1]".into()
    })?;
    let g_f = p.atom.g_factor(p.leg.f).ok_or_else(|| {
        Error::domain(format!(
            "species {} has no g-factor for F = {}",
            p.atom.name, p.leg.f
        ))
    })?;
    if g_f == 0.0 {
        return Err(Error::domain(
            "vanishing g-factor: the oscillating field cannot drive this leg directly",
        ));
    }
    let w_m = p.cantilever.frequency;
    let m_big = p.cantilever.effective_mass;
    let gradient = magnetic_dipole_gradient(p.magnet_moment, p.distance)?;
    let b_qm = zero_point_amplitude(m_big, w_m)?;
    let mut g0 = MU_B * g_f.abs() * gradient * b_qm * p.leg.fx_matrix_element()? / HBAR;
    if p.two_photon {
        g0 /= TWO_PHOTON_REDUCTION;
    }
    // The spin is tuned onto resonance, so omega_a = omega_m. Epsilon is the value
    // that would give the same g0 for a motional coupling.
    let eps_equiv = 2.0 * g0 / (w_m * (p.atom.mass / m_big).sqrt());
    let budget = assemble_budget(
        eps_equiv,
        g0,
        p.n_atoms,
        w_m,
        w_m,
        &p.cantilever,
        &p.environment,
        p.atomic_decoherence,
    )?;
    Ok(MagneticReport {
        transfer_time: transfer_time(g0, p.n_atoms)?,
        budget,
        gradient,
        static_gradient: gradient * p.static_gradient_residual,
        zero_point_amplitude: b_qm,
        larmor_frequency: p.bias_field.map(|b| larmor_frequency(g_f, b)),
        resonance_b0: HBAR * w_m / (MU_B * g_f.abs()),
    })
}
