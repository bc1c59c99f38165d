//! Reported numbers for the cavity-mediated atom-membrane coupling.
//!
//! Nothing is derived here. The record is carried so that reports can list
//! the scheme next to the computed ones.

use serde::{Deserialize, Serialize};

use crate::physcore::{hz_to_angular, HBAR, K_B};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySchemeRecord {
    pub species: String,
    /// rad/s
    pub reported_g0: f64,
    /// rad/s
    pub reported_omega_m: f64,
    pub reported_q: f64,
    pub finesse: f64,
    /// K
    pub temperature: f64,
    /// (length, width, thickness) of the membrane, m.
    pub membrane_dimensions: [f64; 3],
    /// Reported ratio g0 / decoherence.
    pub reported_coherence_ratio: f64,
}

impl CavitySchemeRecord {
    /// Published single-atom membrane configuration.
    pub fn published() -> Self {
        Self {
            species: "Cs133".into(),
            reported_g0: hz_to_angular(45e3),
            reported_omega_m: hz_to_angular(1.3e6),
            reported_q: 1e7,
            finesse: 2e5,
            temperature: 2.0,
            membrane_dimensions: [100e-6, 100e-6, 0.05e-6],
            reported_coherence_ratio: 10.0,
        }
    }

    /// Bare thermal decoherence k_B T / (hbar Q) for display beside g0, rad/s.
    pub fn thermal_decoherence(&self) -> f64 {
        K_B * self.temperature / (HBAR * self.reported_q)
    }
}
