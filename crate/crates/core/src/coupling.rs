//! Two-oscillator coupling engine: equilibrium and frequency shifts, the
//! coupling strength parameter, the single-phonon coupling and the
//! decoherence budget built from them.

use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::physcore::{
    angular_to_hz, mechanical_decoherence_rate, thermal_occupation, AtomSpecies, Environment,
    OscillatorSpec, TrapSpec,
};
use crate::potentials::CouplingPotential;

/// Relative detuning above which the non-resonant prefactor sqrt(omega_a/omega_m) is kept.
pub const DETUNING_PREFACTOR_THRESHOLD: f64 = 1e-3;

/// Largest |epsilon| accepted when trap compensation is used.
pub const MAX_COMPENSATED_EPSILON: f64 = 1e2;

/// An atom (or ensemble) in a trap, coupled to one mechanical mode through `potential`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPair {
    pub atom: AtomSpecies,
    pub n_atoms: u64,
    pub trap: TrapSpec,
    pub oscillator: OscillatorSpec,
    pub potential: CouplingPotential,
    /// d, m
    pub equilibrium_distance: f64,
    pub environment: Environment,
    /// gamma_a,dec, rad/s (supplied, not modelled)
    pub atomic_decoherence: f64,
    /// Multiplier on epsilon from trap-distortion compensation, >= 1.
    pub compensation_factor: f64,
}

/// Coupling rates and decoherence rates of one configuration. All rates in rad/s.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingBudget {
    pub epsilon: f64,
    pub g0: f64,
    pub g_n: f64,
    pub n_atoms: u64,
    pub gamma_m_dec: f64,
    pub gamma_a_dec: f64,
    pub n_th: f64,
    pub effective_omega_a: f64,
    pub effective_omega_m: f64,
    /// omega_a - omega_m
    pub detuning: f64,
    pub strong_coupling: bool,
    pub warnings: Vec<String>,
}

/// Flat record with the fixed output field names, frequencies in Hz.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetRecord {
    pub epsilon: f64,
    pub g0_hz: f64,
    #[serde(rename = "gN_hz")]
    pub gn_hz: f64,
    pub gamma_m_dec_hz: f64,
    pub gamma_a_dec_hz: f64,
    pub n_th: f64,
    pub strong_coupling: bool,
}

impl BudgetRecord {
    pub const COLUMNS: [&'static str; 7] = [
        "epsilon",
        "g0_hz",
        "gN_hz",
        "gamma_m_dec_hz",
        "gamma_a_dec_hz",
        "n_th",
        "strong_coupling",
    ];

    pub fn csv_row(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{}",
            self.epsilon,
            self.g0_hz,
            self.gn_hz,
            self.gamma_m_dec_hz,
            self.gamma_a_dec_hz,
            self.n_th,
            self.strong_coupling
        )
    }
}

impl CouplingBudget {
    pub fn record(&self) -> BudgetRecord {
        BudgetRecord {
            epsilon: self.epsilon,
            g0_hz: angular_to_hz(self.g0),
            gn_hz: angular_to_hz(self.g_n),
            gamma_m_dec_hz: angular_to_hz(self.gamma_m_dec),
            gamma_a_dec_hz: angular_to_hz(self.gamma_a_dec),
            n_th: self.n_th,
            strong_coupling: self.strong_coupling,
        }
    }
}

/// Strong coupling: the collective rate beats both decoherence rates.
pub fn strong_coupling_verdict(g_n: f64, gamma_m_dec: f64, gamma_a_dec: f64) -> bool {
    g_n.abs() > gamma_m_dec.max(gamma_a_dec)
}

/// Signed epsilon `U'' / (m omega_a0^2 + U'')`; errors once the trap vanishes.
pub fn epsilon_from_curvature(u2: f64, atom_mass: f64, bare_frequency: f64) -> Result<f64> {
    let k0 = atom_mass * bare_frequency * bare_frequency;
    let denom = k0 + u2;
    if denom <= 0.0 {
        return Err(Error::TrapVanished {
            curvature: u2,
            critical: -k0,
        });
    }
    Ok(u2 / denom)
}

/// Single-phonon coupling `eps (omega_a/2) sqrt(m/M)`, with the extra
/// `sqrt(omega_a/omega_m)` when the pair is detuned by more than 1e-3 relative.
pub fn single_phonon_coupling(
    epsilon: f64,
    omega_a: f64,
    omega_m: f64,
    atom_mass: f64,
    oscillator_mass: f64,
) -> Result<f64> {
    ensure(omega_a > 0.0 && omega_m > 0.0, || {
        format!("frequencies must be positive (omega_a={omega_a:e}, omega_m={omega_m:e})")
    })?;
    ensure(atom_mass > 0.0 && oscillator_mass > 0.0, || {
        "masses must be positive".into()
    })?;
    let mut g = epsilon * 0.5 * omega_a * (atom_mass / oscillator_mass).sqrt();
    if ((omega_a - omega_m) / omega_a).abs() > DETUNING_PREFACTOR_THRESHOLD {
        g *= (omega_a / omega_m).sqrt();
    }
    Ok(g)
}

/// Rates and verdict around a known coupling. Every scheme ends here.
#[allow(clippy::too_many_arguments)]
pub fn assemble_budget(
    epsilon: f64,
    g0: f64,
    n_atoms: u64,
    omega_a: f64,
    omega_m: f64,
    oscillator: &OscillatorSpec,
    environment: &Environment,
    gamma_a_dec: f64,
) -> Result<CouplingBudget> {
    ensure(n_atoms >= 1, || "n_atoms must be >= 1".into())?;
    ensure(gamma_a_dec >= 0.0, || {
        "atomic decoherence rate must be >= 0".into()
    })?;
    let t = environment.bath_temperature;
    let gamma_m_dec = mechanical_decoherence_rate(oscillator.quality_factor, t)?;
    let n_th = thermal_occupation(omega_m, t)?;
    let g_n = (n_atoms as f64).sqrt() * g0;
    Ok(CouplingBudget {
        epsilon,
        g0,
        g_n,
        n_atoms,
        gamma_m_dec,
        gamma_a_dec,
        n_th,
        effective_omega_a: omega_a,
        effective_omega_m: omega_m,
        detuning: omega_a - omega_m,
        strong_coupling: strong_coupling_verdict(g_n, gamma_m_dec, gamma_a_dec),
        warnings: Vec::new(),
    })
}

impl CoupledPair {
    pub fn validate(&self) -> Result<()> {
        ensure(self.n_atoms >= 1, || "n_atoms must be >= 1".into())?;
        ensure(self.atomic_decoherence >= 0.0, || {
            "atomic decoherence rate must be >= 0".into()
        })?;
        ensure(self.compensation_factor >= 1.0, || {
            format!(
                "compensation factor must be >= 1, got {}",
                self.compensation_factor
            )
        })?;
        self.oscillator.validate()?;
        self.potential.check_distance(self.equilibrium_distance)
    }

    fn derivative(&self, order: u32) -> Result<f64> {
        self.potential.derivative(order, self.equilibrium_distance)
    }

    /// U_c''[d], J/m^2.
    pub fn curvature(&self) -> Result<f64> {
        self.derivative(2)
    }

    /// (dZ_a, dZ_m): shift of the atomic and mechanical rest positions.
    pub fn equilibrium_shifts(&self) -> Result<(f64, f64)> {
        let u1 = self.derivative(1)?;
        let wa0 = self.trap.bare_frequency;
        let wm0 = self.oscillator.frequency;
        Ok((
            u1 / (self.atom.mass * wa0 * wa0),
            -u1 / (self.oscillator.effective_mass * wm0 * wm0),
        ))
    }

    /// Deformed (omega_a, omega_m).
    pub fn effective_frequencies(&self) -> Result<(f64, f64)> {
        let u2 = self.curvature()?;
        let m = self.atom.mass;
        let big_m = self.oscillator.effective_mass;
        let wa0 = self.trap.bare_frequency;
        let wm0 = self.oscillator.frequency;
        let ka = m * wa0 * wa0 + u2;
        if ka <= 0.0 {
            return Err(Error::TrapVanished {
                curvature: u2,
                critical: -m * wa0 * wa0,
            });
        }
        let km = big_m * wm0 * wm0 + u2;
        if km <= 0.0 {
            return Err(Error::Regime(format!(
                "coupling curvature {u2:e} J/m^2 removes the mechanical restoring force"
            )));
        }
        Ok(((ka / m).sqrt(), (km / big_m).sqrt()))
    }

    /// Signed epsilon = U'' / (m omega_a0^2 + U''), without compensation.
    pub fn coupling_strength_parameter(&self) -> Result<f64> {
        epsilon_from_curvature(self.curvature()?, self.atom.mass, self.trap.bare_frequency)
    }

    /// Epsilon after the compensation multiplier; rejected above 1e2.
    pub fn compensated_epsilon(&self) -> Result<f64> {
        let eps = self.compensation_factor * self.coupling_strength_parameter()?;
        if eps.abs() > MAX_COMPENSATED_EPSILON {
            return Err(Error::Regime(format!(
                "|epsilon| = {:.3e} exceeds the compensation limit {MAX_COMPENSATED_EPSILON}",
                eps.abs()
            )));
        }
        Ok(eps)
    }

    pub fn single_phonon_coupling(&self) -> Result<f64> {
        let (wa, wm) = self.effective_frequencies()?;
        single_phonon_coupling(
            self.compensated_epsilon()?,
            wa,
            wm,
            self.atom.mass,
            self.oscillator.effective_mass,
        )
    }

    /// Small-amplitude anharmonic oscillation frequency of the atom.
    pub fn anharmonic_frequency(&self, amplitude: f64) -> Result<f64> {
        ensure(amplitude >= 0.0, || {
            format!("amplitude must be >= 0, got {amplitude:e}")
        })?;
        let (wa, _) = self.effective_frequencies()?;
        let u4 = self.derivative(4)?;
        let w2 = wa * wa + amplitude * amplitude * u4 / (8.0 * self.atom.mass);
        if w2 <= 0.0 {
            return Err(Error::AmplitudeBeyondValidity { amplitude });
        }
        Ok(w2.sqrt())
    }

    pub fn budget(&self) -> Result<CouplingBudget> {
        self.validate().map_err(|e| e.context("coupled pair"))?;
        let (wa, wm) = self
            .effective_frequencies()
            .map_err(|e| e.context("effective frequencies"))?;
        let eps = self.compensated_epsilon()?;
        let g0 =
            single_phonon_coupling(eps, wa, wm, self.atom.mass, self.oscillator.effective_mass)?;
        let mut b = assemble_budget(
            eps,
            g0,
            self.n_atoms,
            wa,
            wm,
            &self.oscillator,
            &self.environment,
            self.atomic_decoherence,
        )
        .map_err(|e| e.context("budget"))?;
        if ((wa - wm) / wa).abs() > DETUNING_PREFACTOR_THRESHOLD {
            b.warnings.push(format!(
                "off resonance: omega_a - omega_m = 2pi x {:.4e} Hz; rotating-wave coupling is approximate",
                angular_to_hz(wa - wm)
            ));
        }
        Ok(b)
    }
}
