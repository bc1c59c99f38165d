//! One-dimensional coupling potentials `U_c[d]` with analytic derivatives.
//!
//! Every supported kind is a power law `A * d^(-p)`, so all derivatives go
//! through one kernel: `d^n/dx^n A x^-p = A (-1)^n p (p+1) ... (p+n-1) x^(-p-n)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physcore::{EPSILON_0, MU_0};

/// Default validity window of every potential, m.
pub const DEFAULT_VALID_RANGE: (f64, f64) = (10e-9, 100e-6);

/// Highest derivative order available.
pub const MAX_ORDER: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialKind {
    /// Point charges: `e q / (4 pi eps0 d)`.
    Coulomb {
        charge_ion_c: f64,
        charge_tip_c: f64,
    },
    /// Non-retarded-form surface potential `-beta C4 / d^4`.
    CasimirPolder { c4_jm4: f64, beta: f64 },
    /// Surface potential of a small object expressed as a fraction of the bulk one.
    ScaledCasimirPolder { c4_jm4: f64, scale: f64 },
    /// Induced dipole in the field of a point charge: `-(alpha0/2) (q / 4 pi eps0 d^2)^2`.
    ChargedTipPolarization {
        alpha0_cm2_per_v: f64,
        charge_c: f64,
    },
    /// Two coaxial, parallel point dipoles: `-mu0 mu_a mu_b / (2 pi d^3)`.
    MagneticDipolePair { moment_a_jt: f64, moment_b_jt: f64 },
    /// `coefficient / d^exponent`.
    CustomPowerLaw { coefficient: f64, exponent: f64 },
}

/// A coupling potential together with the window where it may be evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CouplingPotential {
    pub kind: PotentialKind,
    pub valid_range: (f64, f64),
}

impl CouplingPotential {
    pub fn new(kind: PotentialKind) -> Result<Self> {
        Self::with_range(kind, DEFAULT_VALID_RANGE)
    }

    pub fn with_range(kind: PotentialKind, valid_range: (f64, f64)) -> Result<Self> {
        let (lo, hi) = valid_range;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::domain(format!(
                "valid range must satisfy 0 < d_min < d_max, got [{lo:e}, {hi:e}]"
            )));
        }
        match kind {
            PotentialKind::CasimirPolder { c4_jm4, beta } if !(c4_jm4 > 0.0 && beta >= 0.0) => {
                return Err(Error::domain("Casimir-Polder needs C4 > 0 and beta >= 0"));
            }
            PotentialKind::ScaledCasimirPolder { c4_jm4, scale }
                if !(c4_jm4 > 0.0 && scale >= 0.0) =>
            {
                return Err(Error::domain(
                    "scaled Casimir-Polder needs C4 > 0 and scale >= 0",
                ));
            }
            PotentialKind::ChargedTipPolarization {
                alpha0_cm2_per_v, ..
            } if alpha0_cm2_per_v < 0.0 => {
                return Err(Error::domain("polarizability must be >= 0"));
            }
            PotentialKind::CustomPowerLaw { exponent, .. } if !(exponent > 0.0) => {
                return Err(Error::domain("power-law exponent must be positive"));
            }
            _ => {}
        }
        Ok(CouplingPotential { kind, valid_range })
    }

    pub fn coulomb(charge_ion: f64, charge_tip: f64) -> Result<Self> {
        Self::new(PotentialKind::Coulomb {
            charge_ion_c: charge_ion,
            charge_tip_c: charge_tip,
        })
    }

    pub fn casimir_polder(c4: f64, beta: f64) -> Result<Self> {
        Self::new(PotentialKind::CasimirPolder { c4_jm4: c4, beta })
    }

    pub fn charged_tip_polarization(alpha0: f64, charge: f64) -> Result<Self> {
        Self::new(PotentialKind::ChargedTipPolarization {
            alpha0_cm2_per_v: alpha0,
            charge_c: charge,
        })
    }

    pub fn custom_power_law(coefficient: f64, exponent: f64) -> Result<Self> {
        Self::new(PotentialKind::CustomPowerLaw {
            coefficient,
            exponent,
        })
    }

    /// `(A, p)` with `U = A d^-p`.
    pub fn power_law(&self) -> (f64, f64) {
        match self.kind {
            PotentialKind::Coulomb {
                charge_ion_c,
                charge_tip_c,
            } => (charge_ion_c * charge_tip_c / (4.0 * PI * EPSILON_0), 1.0),
            PotentialKind::CasimirPolder { c4_jm4, beta } => (-beta * c4_jm4, 4.0),
            PotentialKind::ScaledCasimirPolder { c4_jm4, scale } => (-scale * c4_jm4, 4.0),
            PotentialKind::ChargedTipPolarization {
                alpha0_cm2_per_v,
                charge_c,
            } => (-charged_tip_c4(alpha0_cm2_per_v, charge_c), 4.0),
            PotentialKind::MagneticDipolePair {
                moment_a_jt,
                moment_b_jt,
            } => (-MU_0 * moment_a_jt * moment_b_jt / (2.0 * PI), 3.0),
            PotentialKind::CustomPowerLaw {
                coefficient,
                exponent,
            } => (coefficient, exponent),
        }
    }

    pub fn check_distance(&self, d: f64) -> Result<()> {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::domain(format!(
                "distance must be positive, got {d:e}"
            )));
        }
        let (lo, hi) = self.valid_range;
        if d < lo || d > hi {
            return Err(Error::OutOfRange {
                distance: d,
                min: lo,
                max: hi,
            });
        }
        Ok(())
    }

    /// n-th derivative of the potential with respect to the distance, J/m^n.
    pub fn derivative(&self, order: u32, d: f64) -> Result<f64> {
        if order > MAX_ORDER {
            return Err(Error::domain(format!(
                "derivative order {order} not available (max {MAX_ORDER})"
            )));
        }
        self.check_distance(d)?;
        let (a, p) = self.power_law();
        Ok(power_law_derivative(a, p, order, d))
    }

    pub fn value(&self, d: f64) -> Result<f64> {
        self.derivative(0, d)
    }

    /// Same potential with every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> CouplingPotential {
        let (a, p) = self.power_law();
        CouplingPotential {
            kind: PotentialKind::CustomPowerLaw {
                coefficient: a * factor,
                exponent: p,
            },
            valid_range: self.valid_range,
        }
    }
}

/// Effective `C4` of a polarizable atom next to a point charge, `(alpha0/2) (q / 4 pi eps0)^2`.
pub fn charged_tip_c4(alpha0: f64, charge: f64) -> f64 {
    let f = charge / (4.0 * PI * EPSILON_0);
    0.5 * alpha0 * f * f
}

/// Field gradient of a point magnetic dipole on its axis, `3 mu0 mu / (4 pi d^4)`, T/m.
pub fn magnetic_dipole_gradient(moment: f64, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::domain(format!(
            "distance must be positive, got {d:e}"
        )));
    }
    if moment < 0.0 {
        return Err(Error::domain("magnetic moment magnitude must be >= 0"));
    }
    Ok(3.0 * MU_0 * moment / (4.0 * PI * d.powi(4)))
}

/// `d^n/dx^n [a x^-p]` at `x`.
pub(crate) fn power_law_derivative(a: f64, p: f64, order: u32, x: f64) -> f64 {
    let mut coeff = a;
    for k in 0..order {
        coeff *= -(p + k as f64);
    }
    coeff * x.powf(-p - order as f64)
}
