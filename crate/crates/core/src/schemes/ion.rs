//! Trapped ion coupled through the Coulomb force to a charged tip.

use std::f64::consts::PI;

use serde::Serialize;

use crate::coupling::{
    assemble_budget, single_phonon_coupling, CouplingBudget, MAX_COMPENSATED_EPSILON,
};
use crate::error::{ensure, Error, Result};
use crate::physcore::{AtomSpecies, Environment, OscillatorSpec, EPSILON_0};
use crate::potentials::CouplingPotential;

/// Charge on the oscillator tip, either given or from a charged conducting sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TipCharge {
    Charge(f64),
    /// Sphere of capacitance 4 pi eps0 r held at `voltage`.
    Voltage {
        voltage: f64,
        sphere_radius: f64,
    },
}

impl TipCharge {
    pub fn charge(&self) -> f64 {
        match *self {
            TipCharge::Charge(q) => q,
            TipCharge::Voltage {
                voltage,
                sphere_radius,
            } => 4.0 * PI * EPSILON_0 * sphere_radius * voltage,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IonSchemeParams {
    pub ion: AtomSpecies,
    /// Trap frequency with the tip in place, rad/s.
    pub trap_frequency: f64,
    pub tip: TipCharge,
    /// m
    pub distance: f64,
    pub oscillator: OscillatorSpec,
    pub compensation_factor: f64,
    pub environment: Environment,
    /// rad/s
    pub atomic_decoherence: f64,
    /// Epsilon for which the required sphere voltage is reported.
    pub target_epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IonReport {
    pub budget: CouplingBudget,
    pub tip_charge: f64,
    /// Static displacement of the ion, U'/(m omega_a^2), m (negative: away from the tip).
    pub trap_shift: f64,
    /// Sphere voltage giving `target_epsilon` (needs a sphere radius), V.
    pub required_voltage: Option<f64>,
    pub target_epsilon: f64,
}

/// Voltage on a sphere of radius r giving epsilon: `eps m omega^2 d^3 / (2 r e_ion)`.
pub fn required_voltage(
    epsilon: f64,
    ion_mass: f64,
    ion_charge: f64,
    trap_frequency: f64,
    distance: f64,
    sphere_radius: f64,
) -> Result<f64> {
    ensure(ion_charge != 0.0, || {
        "a neutral particle has no Coulomb coupling".into()
    })?;
    ensure(sphere_radius > 0.0 && distance > 0.0, || {
        "sphere radius and distance must be positive".into()
    })?;
    Ok(
        epsilon * ion_mass * trap_frequency * trap_frequency * distance.powi(3)
            / (2.0 * sphere_radius * ion_charge),
    )
}

pub fn ion_budget(p: &IonSchemeParams) -> Result<IonReport> {
    ensure(p.ion.charge != 0.0, || {
        format!("species {} carries no charge", p.ion.name)
    })?;
    ensure(p.trap_frequency > 0.0, || {
        "trap frequency must be positive".into()
    })?;
    ensure(p.compensation_factor >= 1.0, || {
        "compensation factor must be >= 1".into()
    })?;
    let m = p.ion.mass;
    let w = p.trap_frequency;
    let q = p.tip.charge();
    let u = CouplingPotential::coulomb(p.ion.charge, q)?;
    let u2 = u.derivative(2, p.distance)?;
    let eps = p.compensation_factor * u2 / (m * w * w);
    if eps.abs() > MAX_COMPENSATED_EPSILON {
        return Err(Error::Regime(format!(
            "|epsilon| = {:.3e} beyond the compensation limit {MAX_COMPENSATED_EPSILON}",
            eps.abs()
        )));
    }
    let g0 = single_phonon_coupling(
        eps,
        w,
        p.oscillator.frequency,
        m,
        p.oscillator.effective_mass,
    )?;
    let mut budget = assemble_budget(
        eps,
        g0,
        1,
        w,
        p.oscillator.frequency,
        &p.oscillator,
        &p.environment,
        p.atomic_decoherence,
    )?;
    if p.compensation_factor > MAX_COMPENSATED_EPSILON {
        budget.warnings.push(format!(
            "compensation factor {} above the practical limit of 1e2",
            p.compensation_factor
        ));
    }
    if p.compensation_factor == 1.0 && eps > 1.0 {
        budget.warnings.push(format!(
            "epsilon = {eps:.3} > 1 without compensation: the tip curvature exceeds the whole trap curvature"
        ));
    }
    let required_voltage = match p.tip {
        TipCharge::Voltage { sphere_radius, .. } => Some(required_voltage(
            p.target_epsilon / p.compensation_factor,
            m,
            p.ion.charge,
            w,
            p.distance,
            sphere_radius,
        )?),
        TipCharge::Charge(_) => None,
    };
    Ok(IonReport {
        budget,
        tip_charge: q,
        trap_shift: u.derivative(1, p.distance)? / (m * w * w),
        required_voltage,
        target_epsilon: p.target_epsilon,
    })
}
