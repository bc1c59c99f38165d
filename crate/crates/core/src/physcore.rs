//! Constants, parameter types and the closed-form oscillator scales shared by
//! every other module.
//!
//! Internally every frequency is angular (rad/s). Values coming from or going
//! to files are ordinary frequencies in Hz and pass through [`hz_to_angular`] /
//! [`angular_to_hz`] exactly once, at the boundary.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;
/// Bohr magneton, J/T.
pub const MU_B: f64 = 9.274_010_078_3e-24;
/// Vacuum permeability, N/A^2.
pub const MU_0: f64 = 1.256_637_062_12e-6;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Speed of light, m/s.
pub const C_LIGHT: f64 = 299_792_458.0;
/// Elementary charge, C.
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Standard gravity, m/s^2.
pub const G_GRAVITY: f64 = 9.806_65;

/// Mode-shape factor M_eff / M_total for the fundamental flexural mode of a cantilever.
pub const CANTILEVER_MODE_FACTOR: f64 = 0.243;
/// Mode-shape factor for the fundamental mode of a doubly clamped beam.
pub const DOUBLY_CLAMPED_MODE_FACTOR: f64 = 0.397;

/// The SI constants as one value, for callers that want to pass them around.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub k_b: f64,
    pub mu_b: f64,
    pub mu_0: f64,
    pub epsilon_0: f64,
    pub c: f64,
    pub elementary_charge: f64,
    pub g_gravity: f64,
}

impl PhysicalConstants {
    pub const SI: PhysicalConstants = PhysicalConstants {
        hbar: HBAR,
        k_b: K_B,
        mu_b: MU_B,
        mu_0: MU_0,
        epsilon_0: EPSILON_0,
        c: C_LIGHT,
        elementary_charge: E_CHARGE,
        g_gravity: G_GRAVITY,
    };
}

#[inline]
pub fn hz_to_angular(f: f64) -> f64 {
    2.0 * PI * f
}

#[inline]
pub fn angular_to_hz(w: f64) -> f64 {
    w / (2.0 * PI)
}

/// Atomic (or ionic) species data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomSpecies {
    pub name: String,
    /// kg
    pub mass: f64,
    /// C; zero for neutral atoms
    pub charge: f64,
    /// Static polarizability alpha_0, C m^2/V.
    pub static_polarizability: f64,
    /// Lande g_F per hyperfine level label (`"F=1"`, ...).
    pub hyperfine_g_factors: BTreeMap<String, f64>,
    /// Ground-state hyperfine splitting, rad/s.
    pub hyperfine_splitting: Option<f64>,
}

impl AtomSpecies {
    pub fn new(name: impl Into<String>, mass: f64, static_polarizability: f64) -> Result<Self> {
        let name = name.into();
        ensure(mass > 0.0 && mass.is_finite(), || {
            format!("species {name}: mass must be positive, got {mass:e}")
        })?;
        ensure(static_polarizability >= 0.0, || {
            format!("species {name}: polarizability must be >= 0")
        })?;
        Ok(AtomSpecies {
            name,
            mass,
            charge: 0.0,
            static_polarizability,
            hyperfine_g_factors: BTreeMap::new(),
            hyperfine_splitting: None,
        })
    }

    /// g_F of hyperfine level `F`.
    pub fn g_factor(&self, f: u32) -> Option<f64> {
        self.hyperfine_g_factors.get(&format!("F={f}")).copied()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpeciesFile {
    constants: BTreeMap<String, f64>,
    species: Vec<SpeciesRecord>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpeciesRecord {
    name: String,
    #[serde(default)]
    aliases: Vec<String>,
    mass_kg: f64,
    charge_c: f64,
    static_polarizability_cm2_per_v: f64,
    hyperfine_splitting_hz: Option<f64>,
    #[serde(default)]
    g_factors: BTreeMap<String, f64>,
}

/// Species registry loaded from the shipped data table.
#[derive(Debug, Clone)]
pub struct SpeciesTable {
    species: Vec<(Vec<String>, AtomSpecies)>,
    constants: BTreeMap<String, f64>,
}

const SPECIES_DATA: &str = include_str!("../data/species.toml");

impl SpeciesTable {
    pub fn parse(text: &str) -> Result<Self> {
        let file: SpeciesFile =
            toml::from_str(text).map_err(|e| Error::config(format!("species table: {e}")))?;
        let mut species = Vec::with_capacity(file.species.len());
        for rec in file.species {
            let mut s = AtomSpecies::new(
                rec.name.clone(),
                rec.mass_kg,
                rec.static_polarizability_cm2_per_v,
            )?;
            s.charge = rec.charge_c;
            s.hyperfine_g_factors = rec.g_factors;
            s.hyperfine_splitting = rec.hyperfine_splitting_hz.map(hz_to_angular);
            let mut names = vec![rec.name];
            names.extend(rec.aliases);
            species.push((names, s));
        }
        Ok(SpeciesTable {
            species,
            constants: file.constants,
        })
    }

    /// The table compiled into the library.
    pub fn builtin() -> &'static SpeciesTable {
        static TABLE: OnceLock<SpeciesTable> = OnceLock::new();
        TABLE.get_or_init(|| SpeciesTable::parse(SPECIES_DATA).expect("shipped species table"))
    }

    pub fn get(&self, name: &str) -> Result<AtomSpecies> {
        self.species
            .iter()
            .find(|(names, _)| names.iter().any(|n| n == name))
            .map(|(_, s)| s.clone())
            .ok_or_else(|| Error::config(format!("unknown species {name:?}")))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.species.iter().map(|(n, _)| n[0].as_str())
    }

    /// Constants as listed in the data file, keyed by their unit-suffixed name.
    pub fn constants(&self) -> &BTreeMap<String, f64> {
        &self.constants
    }
}

/// Geometry of a beam-like oscillator, used to derive an effective mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub length: f64,
    pub width: f64,
    pub thickness: f64,
    /// kg/m^3
    pub density: f64,
    pub mode_shape_factor: f64,
    /// Point mass at the antinode (e.g. a magnet on a cantilever tip), kg.
    pub tip_mass: f64,
}

impl Geometry {
    pub fn effective_mass(&self) -> f64 {
        self.mode_shape_factor * self.density * self.length * self.width * self.thickness
            + self.tip_mass
    }
}

/// A single mechanical mode.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorSpec {
    /// kg
    pub effective_mass: f64,
    /// rad/s
    pub frequency: f64,
    pub quality_factor: f64,
    /// Power reflectivity R in [0, 1].
    pub power_reflectivity: f64,
    /// Present only when the effective mass was derived from it (approximate).
    pub geometry: Option<Geometry>,
}

impl OscillatorSpec {
    pub fn new(effective_mass: f64, frequency: f64, quality_factor: f64) -> Result<Self> {
        let osc = OscillatorSpec {
            effective_mass,
            frequency,
            quality_factor,
            power_reflectivity: 0.0,
            geometry: None,
        };
        osc.validate()?;
        Ok(osc)
    }

    pub fn from_geometry(geometry: Geometry, frequency: f64, quality_factor: f64) -> Result<Self> {
        ensure(
            geometry.length > 0.0
                && geometry.width > 0.0
                && geometry.thickness > 0.0
                && geometry.density > 0.0
                && geometry.mode_shape_factor > 0.0
                && geometry.tip_mass >= 0.0,
            || "geometry dimensions, density and mode factor must be positive".into(),
        )?;
        let osc = OscillatorSpec {
            effective_mass: geometry.effective_mass(),
            frequency,
            quality_factor,
            power_reflectivity: 0.0,
            geometry: Some(geometry),
        };
        osc.validate()?;
        Ok(osc)
    }

    pub fn with_reflectivity(mut self, r: f64) -> Result<Self> {
        self.power_reflectivity = r;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.effective_mass > 0.0, || {
            format!(
                "oscillator mass must be positive, got {:e}",
                self.effective_mass
            )
        })?;
        ensure(self.frequency > 0.0, || {
            format!(
                "oscillator frequency must be positive, got {:e}",
                self.frequency
            )
        })?;
        ensure(self.quality_factor > 0.0, || {
            "quality factor must be positive".into()
        })?;
        ensure((0.0..=1.0).contains(&self.power_reflectivity), || {
            format!("reflectivity {} outside [0, 1]", self.power_reflectivity)
        })?;
        if let Some(g) = &self.geometry {
            let m = g.effective_mass();
            ensure((m - self.effective_mass).abs() <= 1e-12 * m, || {
                "effective mass inconsistent with geometry".into()
            })?;
        }
        Ok(())
    }

    /// Mechanical energy damping rate omega_m / Q.
    pub fn energy_damping_rate(&self) -> f64 {
        self.frequency / self.quality_factor
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Environment {
    /// K
    pub bath_temperature: f64,
}

impl Environment {
    pub fn new(bath_temperature: f64) -> Result<Self> {
        ensure(bath_temperature >= 0.0, || {
            format!("bath temperature must be >= 0, got {bath_temperature}")
        })?;
        Ok(Environment { bath_temperature })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrapKind {
    Magnetic,
    OpticalLattice,
    IonRf,
    OpticalDipole,
}

/// Unperturbed atomic trap along the coupling axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapSpec {
    /// rad/s
    pub bare_frequency: f64,
    /// m
    pub bare_minimum: f64,
    pub kind: TrapKind,
}

impl TrapSpec {
    pub fn new(bare_frequency: f64, bare_minimum: f64, kind: TrapKind) -> Result<Self> {
        ensure(bare_frequency > 0.0 && bare_frequency.is_finite(), || {
            format!("bare trap frequency must be positive, got {bare_frequency:e}")
        })?;
        Ok(TrapSpec {
            bare_frequency,
            bare_minimum,
            kind,
        })
    }
}

/// Ground-state amplitude sqrt(hbar / 2 m omega).
pub fn zero_point_amplitude(mass: f64, frequency: f64) -> Result<f64> {
    ensure(mass > 0.0 && frequency > 0.0, || {
        format!("zero-point amplitude needs mass, frequency > 0 (got {mass:e}, {frequency:e})")
    })?;
    Ok((HBAR / (2.0 * mass * frequency)).sqrt())
}

/// Classical thermal amplitude sqrt(k_B T / m omega^2).
pub fn thermal_amplitude(mass: f64, frequency: f64, temperature: f64) -> Result<f64> {
    ensure(mass > 0.0 && frequency > 0.0, || {
        format!("thermal amplitude needs mass, frequency > 0 (got {mass:e}, {frequency:e})")
    })?;
    ensure(temperature >= 0.0, || {
        format!("negative temperature {temperature}")
    })?;
    Ok((K_B * temperature / (mass * frequency * frequency)).sqrt())
}

/// High-temperature mean occupation k_B T / (hbar omega).
pub fn thermal_occupation(frequency: f64, temperature: f64) -> Result<f64> {
    ensure(frequency > 0.0, || {
        format!("frequency must be positive, got {frequency:e}")
    })?;
    ensure(temperature >= 0.0, || {
        format!("negative temperature {temperature}")
    })?;
    Ok(K_B * temperature / (HBAR * frequency))
}

/// Thermal decoherence rate of a mechanical mode, k_B T / (hbar Q), in rad/s.
pub fn mechanical_decoherence_rate(quality_factor: f64, temperature: f64) -> Result<f64> {
    ensure(quality_factor > 0.0, || {
        format!("Q must be positive, got {quality_factor}")
    })?;
    ensure(temperature >= 0.0, || {
        format!("negative temperature {temperature}")
    })?;
    Ok(K_B * temperature / (HBAR * quality_factor))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_point_amplitude_examples() {
        let cnt = zero_point_amplitude(2e-20, hz_to_angular(20e3)).unwrap();
        assert!((cnt / 0.2e-9 - 1.0).abs() < 0.4, "{cnt:e}");
        assert_relative_eq!(cnt, 1.448_5e-10, max_relative = 1e-3);

        let w = hz_to_angular(0.9e6);
        let a = zero_point_amplitude(8e-13, w).unwrap();
        let b = zero_point_amplitude(4.0 * 8e-13, w).unwrap();
        assert_relative_eq!(b, a / 2.0, max_relative = 1e-15);
        // sqrt(1.054571817e-34 / (2 * 8e-13 * 2 pi * 0.9e6)), evaluated in extended precision
        assert_relative_eq!(a, 3.414_026_6e-15, max_relative = 1e-6);
    }

    #[test]
    fn thermal_amplitude_examples() {
        let b_th = thermal_amplitude(2e-20, hz_to_angular(20e3), 300.0).unwrap();
        assert!((b_th / 4e-6 - 1.0).abs() < 0.15, "{b_th:e}");
        let a_th = thermal_amplitude(5e-12, hz_to_angular(10e3), 300.0).unwrap();
        assert!((a_th / 0.4e-9 - 1.0).abs() < 0.15, "{a_th:e}");
        assert_eq!(thermal_amplitude(5e-12, 1.0, 0.0).unwrap(), 0.0);
        assert!(thermal_amplitude(5e-12, 1.0, -1.0).is_err());
    }

    #[test]
    fn thermal_occupation_examples() {
        let n = thermal_occupation(hz_to_angular(0.9e6), 2.0).unwrap();
        assert_relative_eq!(n, 4.630e4, max_relative = 1e-3);
        assert_eq!(thermal_occupation(1.0, 0.0).unwrap(), 0.0);
        // 10 mK nanotube: ~1e3 quanta for the 250 kHz single-atom mode,
        // one decade more for the 20 kHz collective mode
        let n_single = thermal_occupation(hz_to_angular(250e3), 10e-3).unwrap();
        assert!((5e2..5e3).contains(&n_single), "{n_single}");
        let n_coll = thermal_occupation(hz_to_angular(20e3), 10e-3).unwrap();
        assert_relative_eq!(n_coll, 1.0418e4, max_relative = 1e-4);
    }

    #[test]
    fn decoherence_rate_examples() {
        let cryo = angular_to_hz(mechanical_decoherence_rate(1e5, 4.0).unwrap());
        assert!((cryo / 1e6 - 1.0).abs() < 0.2, "{cryo}");
        assert_relative_eq!(cryo, 0.8335e6, max_relative = 1e-3);
        let dilution = angular_to_hz(mechanical_decoherence_rate(1e7, 10e-3).unwrap());
        assert!((dilution / 20.0 - 1.0).abs() < 0.1, "{dilution}");
        assert_eq!(mechanical_decoherence_rate(1e7, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn invalid_inputs() {
        assert!(zero_point_amplitude(0.0, 1.0).is_err());
        assert!(zero_point_amplitude(1.0, -1.0).is_err());
        assert!(mechanical_decoherence_rate(0.0, 1.0).is_err());
        assert!(OscillatorSpec::new(1e-12, 1.0, 10.0)
            .unwrap()
            .with_reflectivity(1.5)
            .is_err());
        assert!(TrapSpec::new(0.0, 0.0, TrapKind::Magnetic).is_err());
        assert!(Environment::new(-1.0).is_err());
    }

    #[test]
    fn geometry_mass() {
        let g = Geometry {
            length: 195e-6,
            width: 35e-6,
            thickness: 0.4e-6,
            density: 2330.0,
            mode_shape_factor: CANTILEVER_MODE_FACTOR,
            tip_mass: 0.0,
        };
        let osc = OscillatorSpec::from_geometry(g, hz_to_angular(10e3), 3200.0).unwrap();
        assert_relative_eq!(osc.effective_mass, 0.243 * 2330.0 * 195e-6 * 35e-6 * 0.4e-6);
    }

    #[test]
    fn species_table_matches_constants() {
        let t = SpeciesTable::builtin();
        let c = t.constants();
        assert_eq!(c["hbar_js"], HBAR);
        assert_eq!(c["k_b_j_per_k"], K_B);
        assert_eq!(c["mu_b_j_per_t"], MU_B);
        assert_eq!(c["mu_0_n_per_a2"], MU_0);
        assert_eq!(c["epsilon_0_f_per_m"], EPSILON_0);
        assert_eq!(c["c_m_per_s"], C_LIGHT);
        assert_eq!(c["elementary_charge_c"], E_CHARGE);
        assert_eq!(c["g_gravity_m_per_s2"], G_GRAVITY);
        let rb = t.get("87Rb").unwrap();
        assert_eq!(rb.name, "Rb87");
        assert_eq!(rb.g_factor(1), Some(-0.5));
        assert!(t.get("Be9+").unwrap().charge > 0.0);
        assert!(t.get("Cs133").is_ok());
        assert!(t.get("unobtainium").is_err());
    }

    proptest! {
        #[test]
        fn zero_point_normalization(m in 1e-27f64..1e-9, w in 1e2f64..1e9) {
            let a = zero_point_amplitude(m, w).unwrap();
            prop_assert!((a * a * 2.0 * m * w / HBAR - 1.0).abs() < 1e-14);
        }

        #[test]
        fn thermal_to_zero_point_ratio(m in 1e-27f64..1e-9, w in 1e2f64..1e9, t in 1e-4f64..1e3) {
            let a0 = zero_point_amplitude(m, w).unwrap();
            let ath = thermal_amplitude(m, w, t).unwrap();
            let n = thermal_occupation(w, t).unwrap();
            prop_assert!(((ath * ath) / (a0 * a0) / (2.0 * n) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn monotonicity(m in 1e-27f64..1e-9, w in 1e2f64..1e9, t in 1e-4f64..1e3, q in 1.0f64..1e9) {
            let k = 1.5;
            prop_assert!(zero_point_amplitude(m * k, w).unwrap() < zero_point_amplitude(m, w).unwrap());
            prop_assert!(zero_point_amplitude(m, w * k).unwrap() < zero_point_amplitude(m, w).unwrap());
            prop_assert!(thermal_amplitude(m, w, t * k).unwrap() > thermal_amplitude(m, w, t).unwrap());
            prop_assert!(thermal_amplitude(m * k, w, t).unwrap() < thermal_amplitude(m, w, t).unwrap());
            prop_assert!(thermal_occupation(w * k, t).unwrap() < thermal_occupation(w, t).unwrap());
            prop_assert!(thermal_occupation(w, t * k).unwrap() > thermal_occupation(w, t).unwrap());
            prop_assert!(mechanical_decoherence_rate(q * k, t).unwrap() < mechanical_decoherence_rate(q, t).unwrap());
            prop_assert!(mechanical_decoherence_rate(q, t * k).unwrap() > mechanical_decoherence_rate(q, t).unwrap());
        }
    }
}
