//! Atoms in an optical lattice formed by light reflected off a membrane.

use std::f64::consts::PI;

use serde::Serialize;

use crate::coupling::{assemble_budget, single_phonon_coupling, CouplingBudget};
use crate::error::{ensure, Result};
use crate::physcore::{thermal_occupation, AtomSpecies, Environment, OscillatorSpec, C_LIGHT};

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSchemeParams {
    pub atom: AtomSpecies,
    /// Lattice wavevector k = 2 pi / lambda, 1/m.
    pub wavevector: f64,
    /// Lattice depth U0, J. `None` picks the depth resonant with the membrane.
    pub depth: Option<f64>,
    /// Membrane mode, reflectivity included.
    pub membrane: OscillatorSpec,
    pub n_atoms: u64,
    /// gamma_a^cool, rad/s
    pub atom_cooling_rate: f64,
    pub environment: Environment,
    /// rad/s
    pub atomic_decoherence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeCooling {
    /// omega_m / Q, rad/s
    pub gamma_m: f64,
    /// Gamma_m, rad/s
    pub cooling_rate: f64,
    pub steady_state_occupation: f64,
    /// Gamma_m / gamma_m
    pub cooling_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeReport {
    pub budget: CouplingBudget,
    /// Atomic oscillation frequency in a lattice site, rad/s.
    pub omega_a: f64,
    /// U0, J
    pub depth: f64,
    /// Membrane-side coupling R g_N, rad/s.
    pub g_m: f64,
    pub cooling: LatticeCooling,
}

/// Power modulation and radiation-pressure force on the membrane for an atomic
/// restoring force `force`: (Delta P = F c / 2, F_rp = -2 R Delta P / c).
pub fn lattice_backaction(force: f64, reflectivity: f64) -> Result<(f64, f64)> {
    ensure((0.0..=1.0).contains(&reflectivity), || {
        format!("reflectivity {reflectivity} outside [0, 1]")
    })?;
    let dp = force * C_LIGHT / 2.0;
    Ok((dp, -2.0 * reflectivity * dp / C_LIGHT))
}

/// Sympathetic cooling rate and steady-state occupation of the membrane.
pub fn lattice_cooling(
    membrane: &OscillatorSpec,
    n_th: f64,
    n_atoms: f64,
    g0: f64,
    atom_cooling_rate: f64,
) -> Result<LatticeCooling> {
    ensure(atom_cooling_rate > 0.0, || {
        "atomic cooling rate must be positive".into()
    })?;
    ensure(n_atoms >= 0.0 && n_th >= 0.0, || {
        "atom number and n_th must be >= 0".into()
    })?;
    let gamma_m = membrane.energy_damping_rate();
    let r = membrane.power_reflectivity;
    let big = gamma_m + 4.0 * r * n_atoms * g0 * g0 / atom_cooling_rate;
    let floor = atom_cooling_rate / (4.0 * membrane.frequency);
    Ok(LatticeCooling {
        gamma_m,
        cooling_rate: big,
        steady_state_occupation: gamma_m / big * n_th + floor * floor,
        cooling_factor: big / gamma_m,
    })
}

impl LatticeSchemeParams {
    /// Depth U0 for which the site frequency k sqrt(2 U0 / m) equals omega.
    pub fn resonant_depth(&self, omega: f64) -> f64 {
        self.atom.mass * omega * omega / (2.0 * self.wavevector * self.wavevector)
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * PI / self.wavevector
    }
}

pub fn lattice_budget(p: &LatticeSchemeParams) -> Result<LatticeReport> {
    ensure(p.wavevector > 0.0, || {
        "lattice wavevector must be positive".into()
    })?;
    let m = p.atom.mass;
    let w_m = p.membrane.frequency;
    let depth = p.depth.unwrap_or_else(|| p.resonant_depth(w_m));
    ensure(depth > 0.0, || "lattice depth must be positive".into())?;
    let omega_a = p.wavevector * (2.0 * depth / m).sqrt();
    // the lattice moves rigidly with the membrane
    let g0 = single_phonon_coupling(1.0, omega_a, w_m, m, p.membrane.effective_mass)?;
    let budget = assemble_budget(
        1.0,
        g0,
        p.n_atoms,
        omega_a,
        w_m,
        &p.membrane,
        &p.environment,
        p.atomic_decoherence,
    )?;
    let n_th = thermal_occupation(w_m, p.environment.bath_temperature)?;
    let cooling = lattice_cooling(&p.membrane, n_th, p.n_atoms as f64, g0, p.atom_cooling_rate)?;
    Ok(LatticeReport {
        g_m: p.membrane.power_reflectivity * budget.g_n,
        budget,
        omega_a,
        depth,
        cooling,
    })
}
