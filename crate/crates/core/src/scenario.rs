//! Scenario files: one scheme with its parameters, optional dynamics and GPE
//! runs, sweep axes and regression checks.
//!
//! Keys carry their unit (`distance_m`, `frequency_hz`, ...). A key ending in
//! `_hz` is an ordinary frequency f; the model value is 2 pi f. Evaluation
//! flattens every result into a map of named quantities so checks and sweeps
//! can address them by name.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::coupling::{BudgetRecord, CouplingBudget};
use crate::dynamics::{swap_cool, MechInitial, SwapDissipation};
use crate::error::{Error, Result};
use crate::gpe::{
    annotate, contrast_curve, evolve, frequency_sweep, ground_state, interaction_for_mu,
    spectroscopy_point, Drive, EvolveOptions, SurfaceGpeSetup,
};
use crate::physcore::{
    angular_to_hz, hz_to_angular, thermal_amplitude, zero_point_amplitude, AtomSpecies,
    Environment, Geometry, OscillatorSpec, SpeciesTable, CANTILEVER_MODE_FACTOR, HBAR,
};
use crate::potentials::CouplingPotential;
use crate::schemes::{
    bec_surface_budget, cnt_budget, ion_budget, lattice_budget, magnetic_budget,
    tof_detection_amplitude, BecSurfaceParams, CavitySchemeRecord, CntParams, CntVariant,
    IonSchemeParams, LatticeSchemeParams, MagneticSchemeParams, Placement, TipCharge, ZeemanLeg,
};
use crate::trapscape::{sweep_row_at, SurfaceTrapFamily, SweepRow};

/// Shipped presets, name and file text.
pub const PRESETS: &[(&str, &str)] = &[
    ("bec_backside", include_str!("../presets/bec_backside.toml")),
    (
        "bec_cantilever",
        include_str!("../presets/bec_cantilever.toml"),
    ),
    (
        "cavity_reference",
        include_str!("../presets/cavity_reference.toml"),
    ),
    (
        "cnt_collective",
        include_str!("../presets/cnt_collective.toml"),
    ),
    ("cnt_single", include_str!("../presets/cnt_single.toml")),
    ("ion_be9", include_str!("../presets/ion_be9.toml")),
    (
        "lattice_membrane",
        include_str!("../presets/lattice_membrane.toml"),
    ),
    (
        "magnetic_rb87",
        include_str!("../presets/magnetic_rb87.toml"),
    ),
];

pub fn builtin_preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Ion,
    BecSurface,
    Cnt,
    Lattice,
    Magnetic,
    Cavity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub scheme: SchemeKind,
    pub oscillator: Option<OscillatorBlock>,
    pub environment: Option<EnvironmentBlock>,
    pub ion: Option<IonBlock>,
    pub bec_surface: Option<SurfaceBlock>,
    pub cnt: Option<CntBlock>,
    pub lattice: Option<LatticeBlock>,
    pub magnetic: Option<MagneticBlock>,
    pub cavity: Option<CavityBlock>,
    pub tof: Option<TofBlock>,
    pub gpe: Option<GpeBlock>,
    pub swap: Option<SwapBlock>,
    #[serde(default, rename = "sweep")]
    pub sweeps: Vec<SweepBlock>,
    #[serde(default, rename = "check")]
    pub checks: Vec<CheckBlock>,
    pub output: Option<OutputBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscillatorBlock {
    /// Either this or `geometry`.
    pub effective_mass_kg: Option<f64>,
    pub frequency_hz: f64,
    pub quality_factor: f64,
    #[serde(default)]
    pub power_reflectivity: f64,
    pub geometry: Option<GeometryBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryBlock {
    pub length_m: f64,
    pub width_m: f64,
    pub thickness_m: f64,
    pub density_kg_per_m3: f64,
    /// Defaults to the singly clamped beam value.
    pub mode_shape_factor: Option<f64>,
    #[serde(default)]
    pub tip_mass_kg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentBlock {
    pub bath_temperature_k: f64,
    /// Extra temperature at which the oscillator's thermal amplitude is reported.
    pub reference_temperature_k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IonBlock {
    pub species: String,
    pub trap_frequency_hz: f64,
    pub distance_m: f64,
    pub tip_charge_c: Option<f64>,
    pub tip_voltage_v: Option<f64>,
    pub sphere_radius_m: Option<f64>,
    #[serde(default = "one")]
    pub target_epsilon: f64,
    #[serde(default = "one")]
    pub compensation_factor: f64,
    #[serde(default)]
    pub atomic_decoherence_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceBlock {
    pub species: String,
    pub trap_frequency_hz: f64,
    pub c4_jm4: f64,
    pub beta: f64,
    #[serde(default)]
    pub gravity: bool,
    #[serde(default = "yes")]
    pub retune: bool,
    /// Exactly one of `distance_m` and `barrier_quanta`.
    pub distance_m: Option<f64>,
    pub barrier_quanta: Option<f64>,
    pub n_atoms: u64,
    #[serde(default)]
    pub atomic_decoherence_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TofBlock {
    pub n_atoms: f64,
    pub trap_frequency_hz: f64,
    pub alpha: f64,
    pub time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GpeMode {
    Evolve,
    Contrast,
    Spectroscopy,
    FrequencySweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpeBlock {
    pub mode: GpeMode,
    pub n_atoms: f64,
    /// Either this or `tf_chemical_potential_quanta`.
    pub interaction_1d_jm: Option<f64>,
    /// g_1D chosen so the Thomas-Fermi mu is this many hbar omega_a.
    pub tf_chemical_potential_quanta: Option<f64>,
    #[serde(default)]
    pub drive_amplitude_m: f64,
    /// Defaults to the oscillator frequency.
    pub drive_frequency_hz: Option<f64>,
    #[serde(default)]
    pub drive_phase_rad: f64,
    #[serde(default = "default_points")]
    pub grid_points: usize,
    #[serde(default = "default_below_saddle")]
    pub below_saddle_m: f64,
    #[serde(default = "default_above_minimum")]
    pub above_minimum_m: f64,
    #[serde(default = "default_absorber_offset")]
    pub absorber_offset_m: f64,
    #[serde(default = "default_absorber_quanta")]
    pub absorber_quanta: f64,
    #[serde(default = "default_steps_per_period")]
    pub steps_per_period: f64,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default)]
    pub loss_rate_per_s: f64,
    pub sample_interval_s: Option<f64>,
    #[serde(default)]
    pub amplitudes_m: Vec<f64>,
    #[serde(default)]
    pub trap_frequencies_hz: Vec<f64>,
    #[serde(default)]
    pub drive_frequencies_hz: Vec<f64>,
    /// Contrast defining the onset amplitude.
    #[serde(default = "default_onset")]
    pub contrast_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CntBlock {
    /// "cp", "charged" or "current_carrying"
    pub variant: String,
    pub scale: Option<f64>,
    pub charge_c: Option<f64>,
    pub species: String,
    pub c4_jm4: f64,
    pub trap_frequency_hz: f64,
    pub barrier_quanta: f64,
    pub n_atoms: u64,
    #[serde(default)]
    pub atomic_decoherence_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeBlock {
    pub species: String,
    pub wavelength_m: f64,
    /// Defaults to the depth resonant with the membrane.
    pub depth_j: Option<f64>,
    pub n_atoms: u64,
    pub atom_cooling_rate_hz: f64,
    #[serde(default)]
    pub atomic_decoherence_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MagneticBlock {
    pub species: String,
    /// Either this or magnetization and dimensions.
    pub magnet_moment_jt: Option<f64>,
    pub magnetization_a_per_m: Option<f64>,
    pub magnet_dimensions_m: Option<[f64; 3]>,
    pub distance_m: f64,
    pub bias_field_t: Option<f64>,
    pub hyperfine_f: u32,
    pub m_from: i32,
    pub m_to: i32,
    #[serde(default)]
    pub two_photon: bool,
    pub n_atoms: u64,
    #[serde(default)]
    pub atomic_decoherence_hz: f64,
    #[serde(default)]
    pub static_gradient_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityBlock {
    pub species: String,
    pub g0_hz: f64,
    pub omega_m_hz: f64,
    pub quality_factor: f64,
    pub finesse: f64,
    pub temperature_k: f64,
    pub membrane_dimensions_m: [f64; 3],
    pub coherence_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwapBlock {
    #[serde(default = "one_usize")]
    pub n_atoms: usize,
    /// Start in this Fock state...
    pub initial_fock: Option<usize>,
    /// ...or in a thermal state with this mean phonon number.
    pub initial_occupation: Option<f64>,
    /// Overrides |g0| from the budget.
    pub coupling_hz: Option<f64>,
    /// Mechanical damping from Q and n_th, atomic dephasing from gamma_a,dec.
    #[serde(default)]
    pub with_dissipation: bool,
}

/// One sweep axis: a dotted path into the scenario and its grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub axis: String,
    pub values: Option<Vec<f64>>,
    /// [start, stop, points]
    pub linspace: Option<[f64; 3]>,
    /// [start, stop, points], start and stop > 0
    pub logspace: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckBlock {
    pub id: String,
    pub quantity: String,
    pub target: Option<f64>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    /// Pass if target / factor <= value <= target * factor.
    pub factor: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    #[serde(default)]
    pub exact: bool,
    /// Where the target comes from: "published", "derived" or "chosen".
    pub source: String,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default)]
    pub formats: Vec<OutputFormat>,
    pub stem: Option<String>,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn default_points() -> usize {
    512
}
fn default_below_saddle() -> f64 {
    0.5e-6
}
fn default_above_minimum() -> f64 {
    1.2e-6
}
fn default_absorber_offset() -> f64 {
    0.1e-6
}
fn default_absorber_quanta() -> f64 {
    50.0
}
fn default_steps_per_period() -> f64 {
    100.0
}
fn default_duration() -> f64 {
    20e-3
}
fn default_onset() -> f64 {
    0.1
}

fn config_err(what: impl std::fmt::Display) -> Error {
    Error::Config(what.to_string())
}

impl SweepBlock {
    /// Parse a command-line axis `path=spec`, spec one of `a,b,c`,
    /// `lin:start:stop:points` or `log:start:stop:points`.
    pub fn parse_cli(arg: &str) -> Result<SweepBlock> {
        let (axis, spec) = arg
            .split_once('=')
            .ok_or_else(|| config_err(format!("axis '{arg}' must look like path=grid")))?;
        let num = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| config_err(format!("bad number '{s}' in axis '{arg}'")))
        };
        let mut block = SweepBlock {
            axis: axis.trim().to_string(),
            values: None,
            linspace: None,
            logspace: None,
        };
        let range = |rest: &str| -> Result<[f64; 3]> {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(config_err(format!(
                    "range in '{arg}' needs start:stop:points"
                )));
            }
            Ok([num(parts[0])?, num(parts[1])?, num(parts[2])?])
        };
        if let Some(rest) = spec.strip_prefix("lin:") {
            block.linspace = Some(range(rest)?);
        } else if let Some(rest) = spec.strip_prefix("log:") {
            block.logspace = Some(range(rest)?);
        } else if spec.trim().is_empty() {
            block.values = Some(Vec::new());
        } else {
            block.values = Some(spec.split(',').map(num).collect::<Result<_>>()?);
        }
        Ok(block)
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        let count = |n: f64| -> Result<usize> {
            if n.fract() != 0.0 || n < 1.0 {
                Err(config_err(format!(
                    "axis {}: point count must be a positive integer",
                    self.axis
                )))
            } else {
                Ok(n as usize)
            }
        };
        let grid = match (&self.values, &self.linspace, &self.logspace) {
            (Some(v), None, None) => v.clone(),
            (None, Some([a, b, n]), None) => {
                let n = count(*n)?;
                if n == 1 {
                    vec![*a]
                } else {
                    (0..n)
                        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
                        .collect()
                }
            }
            (None, None, Some([a, b, n])) => {
                let n = count(*n)?;
                if !(*a > 0.0 && *b > 0.0) {
                    return Err(config_err(format!(
                        "axis {}: log grid needs positive ends",
                        self.axis
                    )));
                }
                if n == 1 {
                    vec![*a]
                } else {
                    let (la, lb) = (a.ln(), b.ln());
                    (0..n)
                        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
                        .collect()
                }
            }
            _ => {
                return Err(config_err(format!(
                    "axis {}: give exactly one of values, linspace, logspace",
                    self.axis
                )))
            }
        };
        if grid.is_empty() {
            return Err(config_err(format!("axis {}: empty grid", self.axis)));
        }
        if grid.iter().any(|x| !x.is_finite()) {
            return Err(config_err(format!(
                "axis {}: non-finite grid value",
                self.axis
            )));
        }
        Ok(grid)
    }
}

/// Set the number at dotted `path` in a parsed file. Intermediate tables must
/// exist; a missing leaf is created and left for schema validation to accept or
/// reject.
pub fn set_path(doc: &mut toml::Value, path: &str, x: f64) -> Result<()> {
    let (parents, leaf) = match path.rsplit_once('.') {
        Some((p, l)) => (p.split('.').collect::<Vec<_>>(), l),
        None => (Vec::new(), path),
    };
    let mut cur = doc;
    for key in parents {
        cur = cur.get_mut(key).filter(|v| v.is_table()).ok_or_else(|| {
            config_err(format!("axis {path}: no section '{key}' in the scenario"))
        })?;
    }
    let table = cur
        .as_table_mut()
        .ok_or_else(|| config_err(format!("axis {path}: not a section")))?;
    let value = match table.get(leaf) {
        Some(toml::Value::Integer(_)) if x.fract() == 0.0 && x.abs() < 9e15 => {
            toml::Value::Integer(x as i64)
        }
        Some(toml::Value::Integer(_) | toml::Value::Float(_)) | None => toml::Value::Float(x),
        Some(_) => return Err(config_err(format!("axis {path}: value is not a number"))),
    };
    table.insert(leaf.to_string(), value);
    Ok(())
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario> {
        let doc: toml::Value = toml::from_str(text).map_err(|e| config_err(e.message()))?;
        Scenario::from_value(doc)
    }

    pub fn from_value(doc: toml::Value) -> Result<Scenario> {
        let s: Scenario = doc
            .try_into()
            .map_err(|e: toml::de::Error| config_err(e.message()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let present = [
            (SchemeKind::Ion, self.ion.is_some()),
            (SchemeKind::BecSurface, self.bec_surface.is_some()),
            (SchemeKind::Cnt, self.cnt.is_some()),
            (SchemeKind::Lattice, self.lattice.is_some()),
            (SchemeKind::Magnetic, self.magnetic.is_some()),
            (SchemeKind::Cavity, self.cavity.is_some()),
        ];
        for (kind, here) in present {
            if here != (kind == self.scheme) {
                return Err(config_err(if here {
                    format!(
                        "section for {kind:?} present but scheme is {:?}",
                        self.scheme
                    )
                } else {
                    format!("scheme {kind:?} needs its parameter section")
                }));
            }
        }
        let needs_oscillator = self.scheme != SchemeKind::Cavity;
        if needs_oscillator && self.oscillator.is_none() {
            return Err(config_err("missing [oscillator] section"));
        }
        if needs_oscillator && self.environment.is_none() {
            return Err(config_err("missing [environment] section"));
        }
        if (self.gpe.is_some() || self.tof.is_some()) && self.scheme != SchemeKind::BecSurface {
            return Err(config_err("[gpe] and [tof] need scheme = \"bec_surface\""));
        }
        if let Some(b) = &self.bec_surface {
            if b.distance_m.is_some() == b.barrier_quanta.is_some() {
                return Err(config_err(
                    "bec_surface: give exactly one of distance_m, barrier_quanta",
                ));
            }
        }
        if let Some(g) = &self.gpe {
            if g.interaction_1d_jm.is_some() && g.tf_chemical_potential_quanta.is_some() {
                return Err(config_err(
                    "gpe: give at most one of interaction_1d_jm, tf_chemical_potential_quanta",
                ));
            }
            let grid_needed = match g.mode {
                GpeMode::Evolve => None,
                GpeMode::Contrast => Some(("amplitudes_m", g.amplitudes_m.len())),
                GpeMode::Spectroscopy => Some(("trap_frequencies_hz", g.trap_frequencies_hz.len())),
                GpeMode::FrequencySweep => {
                    Some(("drive_frequencies_hz", g.drive_frequencies_hz.len()))
                }
            };
            if let Some((key, 0)) = grid_needed {
                return Err(config_err(format!("gpe: {key} is empty")));
            }
        }
        for s in &self.sweeps {
            s.grid()?;
        }
        let mut ids: Vec<&str> = self.checks.iter().map(|c| c.id.as_str()).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(config_err(format!("duplicate check id {}", w[0])));
        }
        for c in &self.checks {
            c.validate()?;
        }
        Ok(())
    }

    fn oscillator(&self) -> Result<OscillatorSpec> {
        let o = self
            .oscillator
            .as_ref()
            .ok_or_else(|| config_err("missing [oscillator] section"))?;
        let w = hz_to_angular(o.frequency_hz);
        let spec = match (&o.geometry, o.effective_mass_kg) {
            (Some(g), None) => OscillatorSpec::from_geometry(
                Geometry {
                    length: g.length_m,
                    width: g.width_m,
                    thickness: g.thickness_m,
                    density: g.density_kg_per_m3,
                    mode_shape_factor: g.mode_shape_factor.unwrap_or(CANTILEVER_MODE_FACTOR),
                    tip_mass: g.tip_mass_kg,
                },
                w,
                o.quality_factor,
            )?,
            (None, Some(m)) => OscillatorSpec::new(m, w, o.quality_factor)?,
            _ => {
                return Err(config_err(
                    "oscillator: give exactly one of effective_mass_kg, geometry",
                ))
            }
        };
        spec.with_reflectivity(o.power_reflectivity)
    }

    fn environment(&self) -> Result<Environment> {
        let e = self
            .environment
            .as_ref()
            .ok_or_else(|| config_err("missing [environment] section"))?;
        Environment::new(e.bath_temperature_k)
    }

    fn surface_family(&self) -> Result<(SurfaceTrapFamily, Placement, &SurfaceBlock)> {
        let b = self
            .bec_surface
            .as_ref()
            .ok_or_else(|| config_err("missing [bec_surface] section"))?;
        let family = SurfaceTrapFamily {
            atom: species(&b.species)?,
            frequency: hz_to_angular(b.trap_frequency_hz),
            surface: CouplingPotential::casimir_polder(b.c4_jm4, b.beta)?,
            gravity_on: b.gravity,
            retune: b.retune,
        };
        let placement = match (b.distance_m, b.barrier_quanta) {
            (Some(d), None) => Placement::Distance(d),
            (None, Some(u)) => Placement::Barrier(u),
            _ => {
                return Err(config_err(
                    "bec_surface: give exactly one of distance_m, barrier_quanta",
                ))
            }
        };
        Ok((family, placement, b))
    }

    /// Trap analysis row at the scenario's placement, in the distance-sweep format.
    pub fn trap_row(&self) -> Result<SweepRow> {
        let (family, placement, _) = self.surface_family()?;
        let d = match placement {
            Placement::Distance(d) => d,
            Placement::Barrier(u) => family.distance_for_barrier(u)?,
        };
        sweep_row_at(&family, d)
    }

    pub fn evaluate(&self) -> Result<Evaluation> {
        let mut ev = Evaluation::default();
        let budget = match self.scheme {
            SchemeKind::Ion => self.eval_ion(&mut ev)?,
            SchemeKind::BecSurface => self.eval_surface(&mut ev)?,
            SchemeKind::Cnt => self.eval_cnt(&mut ev)?,
            SchemeKind::Lattice => self.eval_lattice(&mut ev)?,
            SchemeKind::Magnetic => self.eval_magnetic(&mut ev)?,
            SchemeKind::Cavity => {
                self.eval_cavity(&mut ev)?;
                None
            }
        };
        if let Some(b) = &budget {
            ev.add_budget(b);
        }
        if let Some(e) = &self.environment {
            if let (Some(t), Ok(osc)) = (e.reference_temperature_k, self.oscillator()) {
                ev.set(
                    "thermal_amplitude_reference_m",
                    thermal_amplitude(osc.effective_mass, osc.frequency, t)?,
                );
            }
        }
        if let Some(s) = &self.swap {
            self.eval_swap(s, budget.as_ref(), &mut ev)?;
        }
        Ok(ev)
    }

    fn add_oscillator_amplitudes(&self, ev: &mut Evaluation) -> Result<()> {
        let osc = self.oscillator()?;
        let env = self.environment()?;
        ev.set("oscillator_mass_kg", osc.effective_mass);
        ev.set(
            "zero_point_amplitude_m",
            zero_point_amplitude(osc.effective_mass, osc.frequency)?,
        );
        ev.set(
            "thermal_amplitude_m",
            thermal_amplitude(osc.effective_mass, osc.frequency, env.bath_temperature)?,
        );
        Ok(())
    }

    fn eval_ion(&self, ev: &mut Evaluation) -> Result<Option<CouplingBudget>> {
        let b = self.ion.as_ref().expect("validated");
        let tip = match (b.tip_charge_c, b.tip_voltage_v, b.sphere_radius_m) {
            (Some(q), None, None) => TipCharge::Charge(q),
            (None, Some(v), Some(r)) => TipCharge::Voltage {
                voltage: v,
                sphere_radius: r,
            },
            _ => {
                return Err(config_err(
                    "ion: give tip_charge_c, or tip_voltage_v with sphere_radius_m",
                ))
            }
        };
        let r = ion_budget(&IonSchemeParams {
            ion: species(&b.species)?,
            trap_frequency: hz_to_angular(b.trap_frequency_hz),
            tip,
            distance: b.distance_m,
            oscillator: self.oscillator()?,
            compensation_factor: b.compensation_factor,
            environment: self.environment()?,
            atomic_decoherence: hz_to_angular(b.atomic_decoherence_hz),
            target_epsilon: b.target_epsilon,
        })?;
        ev.set("tip_charge_c", r.tip_charge);
        ev.set("trap_shift_m", r.trap_shift);
        if let Some(v) = r.required_voltage {
            ev.set("required_voltage_v", v);
        }
        self.add_oscillator_amplitudes(ev)?;
        Ok(Some(r.budget))
    }

    fn eval_surface(&self, ev: &mut Evaluation) -> Result<Option<CouplingBudget>> {
        let (family, placement, b) = self.surface_family()?;
        let r = bec_surface_budget(&BecSurfaceParams {
            family: family.clone(),
            placement,
            oscillator: self.oscillator()?,
            n_atoms: b.n_atoms,
            environment: self.environment()?,
            atomic_decoherence: hz_to_angular(b.atomic_decoherence_hz),
        })?;
        ev.set("placement_value_m", r.placement_value);
        ev.set("bare_distance_m", r.analysis.bare_distance);
        ev.set("epsilon_unperturbed", r.analysis.epsilon_unperturbed);
        ev.set(
            "epsilon_unperturbed_abs",
            r.analysis.epsilon_unperturbed.abs(),
        );
        ev.set_flag("vanished", r.analysis.vanished());
        if let Some(bound) = &r.analysis.bound {
            ev.set("distance_m", bound.distance);
            ev.set("barrier_quanta", bound.barrier_in_quanta());
            ev.set(
                "trap_frequency_hz",
                angular_to_hz(bound.effective_frequency),
            );
        }
        self.add_oscillator_amplitudes(ev)?;
        if let Some(t) = &self.tof {
            ev.set(
                "tof_amplitude_m",
                tof_detection_amplitude(
                    t.n_atoms,
                    hz_to_angular(t.trap_frequency_hz),
                    family.atom.mass,
                    t.alpha,
                    t.time_s,
                )?,
            );
        }
        if let Some(g) = &self.gpe {
            self.eval_gpe(g, &family, placement, ev)?;
        }
        Ok(r.budget)
    }

    fn eval_gpe(
        &self,
        g: &GpeBlock,
        family: &SurfaceTrapFamily,
        placement: Placement,
        ev: &mut Evaluation,
    ) -> Result<()> {
        let osc = self.oscillator()?;
        let wa = family.frequency;
        let interaction = |omega_a: f64| match (g.interaction_1d_jm, g.tf_chemical_potential_quanta)
        {
            (Some(g1), None) => g1,
            (None, Some(q)) => {
                interaction_for_mu(q * HBAR * omega_a, g.n_atoms, family.atom.mass, omega_a)
            }
            _ => 0.0,
        };
        let setup = SurfaceGpeSetup {
            family: family.clone(),
            placement,
            n_atoms: g.n_atoms,
            interaction_1d: interaction(wa),
            drive: Drive {
                amplitude: g.drive_amplitude_m,
                frequency: g
                    .drive_frequency_hz
                    .map(hz_to_angular)
                    .unwrap_or(osc.frequency),
                phase: g.drive_phase_rad,
            },
            below_saddle: g.below_saddle_m,
            above_minimum: g.above_minimum_m,
            points: g.grid_points,
            absorber_offset: g.absorber_offset_m,
            absorber_quanta: g.absorber_quanta,
            steps_per_period: g.steps_per_period,
            loss_rate: g.loss_rate_per_s,
        };
        let cfg = setup.config()?;
        let ground = ground_state(&cfg)?;
        ev.set("gpe.interaction_1d_jm", cfg.interaction_1d);
        ev.set(
            "gpe.mu_quanta",
            ground.mu_above_minimum / (HBAR * ground.geometry.frequency),
        );
        ev.set(
            "gpe.barrier_quanta",
            ground.geometry.barrier_height / (HBAR * ground.geometry.frequency),
        );
        ev.set_flag(
            "gpe.mu_below_barrier",
            ground.mu_above_minimum < ground.geometry.barrier_height,
        );
        ev.set("gpe.iterations", ground.iterations as f64);

        match g.mode {
            GpeMode::Evolve => {
                let opts = EvolveOptions {
                    duration: g.duration_s,
                    sample_interval: g.sample_interval_s,
                    snapshot_times: Vec::new(),
                };
                let r = evolve(&cfg, &ground, &opts)?;
                ev.set("gpe.remaining_fraction", r.remaining_fraction);
                ev.set("gpe.depletion", r.depletion);
                ev.set("gpe.com_excursion_m", r.com_excursion());
                ev.tables.insert(
                    "gpe_samples".into(),
                    Table::new(
                        &["t_s", "norm_fraction", "com_m", "energy_per_atom_j"],
                        r.samples
                            .iter()
                            .map(|s| vec![s.t, s.norm, s.com, s.energy_per_atom])
                            .collect(),
                    ),
                );
            }
            GpeMode::Contrast => {
                let pts = contrast_curve(&cfg, &g.amplitudes_m, g.duration_s)?;
                let c: Vec<f64> = pts.iter().map(|p| p.contrast).collect();
                ev.set("gpe.contrast_max", c.iter().cloned().fold(0.0, f64::max));
                ev.set_flag("gpe.contrast_monotone", c.windows(2).all(|w| w[1] >= w[0]));
                if let Some(p) = pts.iter().find(|p| p.amplitude == 0.0) {
                    ev.set("gpe.contrast_at_zero", p.raw_contrast.abs());
                }
                let b: Vec<f64> = pts.iter().map(|p| p.amplitude).collect();
                if let Some(onset) = crossing(&b, &c, g.contrast_threshold) {
                    ev.set("gpe.contrast_onset_m", onset);
                }
                if let Some(half) = crossing(&b, &c, 0.5) {
                    ev.set("gpe.contrast_half_m", half);
                }
                ev.tables.insert(
                    "gpe_contrast".into(),
                    Table::new(
                        &[
                            "amplitude_m",
                            "contrast",
                            "raw_contrast",
                            "remaining_driven",
                            "remaining_reference",
                            "depletion",
                        ],
                        pts.iter()
                            .map(|p| {
                                vec![
                                    p.amplitude,
                                    p.contrast,
                                    p.raw_contrast,
                                    p.remaining_driven,
                                    p.remaining_reference,
                                    p.depletion,
                                ]
                            })
                            .collect(),
                    ),
                );
            }
            GpeMode::Spectroscopy => {
                let rows = g
                    .trap_frequencies_hz
                    .iter()
                    .map(|&f| {
                        let w = hz_to_angular(f);
                        let mut s = setup.clone();
                        s.interaction_1d = interaction(w);
                        spectroscopy_point(&s, w, g.duration_s)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let spectrum = annotate(rows);
                ev.set("gpe.peak_count", spectrum.peaks.len() as f64);
                for (i, p) in spectrum.peaks.iter().take(2).enumerate() {
                    ev.set(&format!("gpe.peak_{}_hz", i + 1), angular_to_hz(p.position));
                }
                ev.tables.insert(
                    "gpe_spectrum".into(),
                    Table::new(
                        &[
                            "omega_a_hz",
                            "distance_m",
                            "epsilon",
                            "mu_quanta",
                            "loss",
                            "depletion",
                        ],
                        spectrum
                            .rows
                            .iter()
                            .map(|r| {
                                vec![
                                    angular_to_hz(r.omega_a),
                                    r.distance,
                                    r.epsilon,
                                    r.mu_quanta,
                                    r.loss,
                                    r.depletion,
                                ]
                            })
                            .collect(),
                    ),
                );
            }
            GpeMode::FrequencySweep => {
                let grid: Vec<f64> = g
                    .drive_frequencies_hz
                    .iter()
                    .map(|f| hz_to_angular(*f))
                    .collect();
                let pts =
                    frequency_sweep(&cfg, &grid, osc.frequency, osc.quality_factor, g.duration_s)?;
                let best = pts
                    .iter()
                    .max_by(|a, b| a.contrast.total_cmp(&b.contrast))
                    .expect("grid checked non-empty");
                ev.set("gpe.peak_drive_hz", angular_to_hz(best.drive_frequency));
                ev.set(
                    "gpe.peak_drive_offset_hz",
                    angular_to_hz(best.drive_frequency - osc.frequency),
                );
                ev.set("gpe.contrast_max", best.contrast);
                ev.tables.insert(
                    "gpe_frequency_sweep".into(),
                    Table::new(
                        &[
                            "drive_frequency_hz",
                            "amplitude_m",
                            "contrast",
                            "remaining_driven",
                            "depletion",
                        ],
                        pts.iter()
                            .map(|p| {
                                vec![
                                    angular_to_hz(p.drive_frequency),
                                    p.amplitude,
                                    p.contrast,
                                    p.remaining_driven,
                                    p.depletion,
                                ]
                            })
                            .collect(),
                    ),
                );
            }
        }
        Ok(())
    }

    fn eval_cnt(&self, ev: &mut Evaluation) -> Result<Option<CouplingBudget>> {
        let b = self.cnt.as_ref().expect("validated");
        let variant = match (b.variant.as_str(), b.scale, b.charge_c) {
            ("cp", Some(scale), None) => CntVariant::Cp { scale },
            ("charged", None, Some(charge)) => CntVariant::Charged { charge },
            ("current_carrying", None, None) => CntVariant::CurrentCarrying,
            (v, _, _) => {
                return Err(config_err(format!(
                    "cnt: variant '{v}' with these keys is not valid (cp needs scale, charged needs charge_c)"
                )))
            }
        };
        let r = cnt_budget(&CntParams {
            variant,
            atom: species(&b.species)?,
            c4: b.c4_jm4,
            trap_frequency: hz_to_angular(b.trap_frequency_hz),
            barrier_quanta: b.barrier_quanta,
            oscillator: self.oscillator()?,
            n_atoms: b.n_atoms,
            environment: self.environment()?,
            atomic_decoherence: hz_to_angular(b.atomic_decoherence_hz),
        })?;
        ev.set("g0_per_epsilon_hz", angular_to_hz(r.g0_per_epsilon));
        ev.set("gN_per_epsilon_hz", angular_to_hz(r.gn_per_epsilon));
        if let Some(beta) = r.effective_beta {
            ev.set("effective_beta", beta);
        }
        self.add_oscillator_amplitudes(ev)?;
        Ok(Some(r.budget))
    }

    fn eval_lattice(&self, ev: &mut Evaluation) -> Result<Option<CouplingBudget>> {
        let b = self.lattice.as_ref().expect("validated");
        let r = lattice_budget(&LatticeSchemeParams {
            atom: species(&b.species)?,
            wavevector: 2.0 * PI / b.wavelength_m,
            depth: b.depth_j,
            membrane: self.oscillator()?,
            n_atoms: b.n_atoms,
            atom_cooling_rate: hz_to_angular(b.atom_cooling_rate_hz),
            environment: self.environment()?,
            atomic_decoherence: hz_to_angular(b.atomic_decoherence_hz),
        })?;
        ev.set("omega_a_hz", angular_to_hz(r.omega_a));
        ev.set("depth_j", r.depth);
        ev.set("g_m_hz", angular_to_hz(r.g_m));
        ev.set("g_m_over_gN", r.g_m / r.budget.g_n);
        ev.set("gamma_m_hz", angular_to_hz(r.cooling.gamma_m));
        ev.set("cooling_rate_hz", angular_to_hz(r.cooling.cooling_rate));
        ev.set("steady_state_occupation", r.cooling.steady_state_occupation);
        ev.set("cooling_factor", r.cooling.cooling_factor);
        self.add_oscillator_amplitudes(ev)?;
        Ok(Some(r.budget))
    }

    fn eval_magnetic(&self, ev: &mut Evaluation) -> Result<Option<CouplingBudget>> {
        let b = self.magnetic.as_ref().expect("validated");
        let moment = match (b.magnet_moment_jt, b.magnetization_a_per_m, b.magnet_dimensions_m) {
            (Some(m), None, None) => m,
            (None, Some(ms), Some([x, y, z])) => ms * x * y * z,
            _ => {
                return Err(config_err(
                    "magnetic: give magnet_moment_jt, or magnetization_a_per_m with magnet_dimensions_m",
                ))
            }
        };
        let mut p = MagneticSchemeParams {
            atom: species(&b.species)?,
            magnet_moment: moment,
            distance: b.distance_m,
            cantilever: self.oscillator()?,
            bias_field: b.bias_field_t,
            leg: ZeemanLeg {
                f: b.hyperfine_f,
                m_from: b.m_from,
                m_to: b.m_to,
            },
            two_photon: b.two_photon,
            n_atoms: b.n_atoms,
            environment: self.environment()?,
            atomic_decoherence: hz_to_angular(b.atomic_decoherence_hz),
            static_gradient_residual: b.static_gradient_residual,
        };
        let r = magnetic_budget(&p)?;
        p.two_photon = false;
        let direct = magnetic_budget(&p)?.budget.g0;
        p.two_photon = true;
        let two = magnetic_budget(&p)?.budget.g0;
        ev.set("magnet_moment_jt", moment);
        ev.set("gradient_t_per_m", r.gradient);
        ev.set("static_gradient_t_per_m", r.static_gradient);
        ev.set("resonance_b0_t", r.resonance_b0);
        if let Some(wl) = r.larmor_frequency {
            ev.set("larmor_hz", angular_to_hz(wl));
        }
        ev.set("transfer_time_s", r.transfer_time);
        ev.set(
            "transfer_identity",
            r.transfer_time * 2.0 * r.budget.g0 * (b.n_atoms as f64).sqrt() / PI,
        );
        ev.set("two_photon_factor", direct / two);
        self.add_oscillator_amplitudes(ev)?;
        Ok(Some(r.budget))
    }

    fn eval_cavity(&self, ev: &mut Evaluation) -> Result<()> {
        let b = self.cavity.as_ref().expect("validated");
        let r = CavitySchemeRecord {
            species: b.species.clone(),
            reported_g0: hz_to_angular(b.g0_hz),
            reported_omega_m: hz_to_angular(b.omega_m_hz),
            reported_q: b.quality_factor,
            finesse: b.finesse,
            temperature: b.temperature_k,
            membrane_dimensions: b.membrane_dimensions_m,
            reported_coherence_ratio: b.coherence_ratio,
        };
        ev.set("g0_hz", angular_to_hz(r.reported_g0));
        ev.set("omega_m_hz", angular_to_hz(r.reported_omega_m));
        ev.set("quality_factor", r.reported_q);
        ev.set("finesse", r.finesse);
        ev.set("coherence_ratio", r.reported_coherence_ratio);
        ev.set(
            "thermal_decoherence_hz",
            angular_to_hz(r.thermal_decoherence()),
        );
        ev.set("g0_over_thermal", r.reported_g0 / r.thermal_decoherence());
        Ok(())
    }

    fn eval_swap(
        &self,
        s: &SwapBlock,
        budget: Option<&CouplingBudget>,
        ev: &mut Evaluation,
    ) -> Result<()> {
        let g = match (s.coupling_hz, budget) {
            (Some(f), _) => hz_to_angular(f),
            (None, Some(b)) => b.g0.abs(),
            (None, None) => return Err(config_err("swap: no budget; give coupling_hz")),
        };
        let diss = match (s.with_dissipation, budget, self.oscillator()) {
            (true, Some(b), Ok(osc)) => SwapDissipation {
                gamma_m: osc.energy_damping_rate(),
                n_th: b.n_th,
                atom_decay: 0.0,
                atom_dephase: b.gamma_a_dec,
            },
            (true, _, _) => {
                return Err(config_err(
                    "swap: dissipation needs a budget and an oscillator",
                ))
            }
            (false, _, _) => SwapDissipation::default(),
        };
        let initial = match (s.initial_fock, s.initial_occupation) {
            (Some(n), None) => MechInitial::Fock(n),
            (None, Some(n)) => MechInitial::Thermal(n),
            _ => {
                return Err(config_err(
                    "swap: give exactly one of initial_fock, initial_occupation",
                ))
            }
        };
        let r = swap_cool(initial, g, s.n_atoms, diss)?;
        ev.set("swap.initial_occupation", r.initial_occupation);
        ev.set("swap.final_occupation", r.final_occupation);
        ev.set("swap.transfer_fidelity", r.transfer_fidelity);
        ev.set("swap.duration_s", r.duration);
        ev.set("swap.mech_levels", r.mech_levels as f64);
        ev.tables.insert(
            "swap".into(),
            Table::new(
                &[
                    "t_s",
                    "atom_excitation",
                    "mech_occupation",
                    "trace",
                    "purity",
                    "min_eigenvalue",
                ],
                r.trajectory
                    .samples
                    .iter()
                    .map(|q| {
                        let d = &q.diagnostics;
                        vec![
                            q.t,
                            d.atom_excitation,
                            d.mech_occupation,
                            d.trace,
                            d.purity,
                            d.min_eigenvalue,
                        ]
                    })
                    .collect(),
            ),
        );
        Ok(())
    }

    /// Evaluate and grade every check.
    pub fn run_checks(&self, ev: &Evaluation) -> Vec<CheckVerdict> {
        self.checks
            .iter()
            .map(|c| c.grade(&self.name, ev.quantities.get(&c.quantity).copied()))
            .collect()
    }
}

/// First amplitude at which `ys` reaches `level`, linearly interpolated.
fn crossing(xs: &[f64], ys: &[f64], level: f64) -> Option<f64> {
    let i = ys.iter().position(|&y| y >= level)?;
    if i == 0 {
        return Some(xs[0]);
    }
    let (x0, x1, y0, y1) = (xs[i - 1], xs[i], ys[i - 1], ys[i]);
    Some(x0 + (x1 - x0) * (level - y0) / (y1 - y0))
}

fn species(name: &str) -> Result<AtomSpecies> {
    SpeciesTable::builtin()
        .get(name)
        .map_err(|_| config_err(format!("unknown species '{name}'")))
}

/// A numeric table (columns x rows).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str], rows: Vec<Vec<f64>>) -> Table {
        Table {
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows,
        }
    }

    pub fn csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|x| format!("{x:e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Evaluation {
    pub quantities: BTreeMap<String, f64>,
    pub budget: Option<BudgetRecord>,
    pub warnings: Vec<String>,
    pub tables: BTreeMap<String, Table>,
}

impl Evaluation {
    fn set(&mut self, name: &str, value: f64) {
        self.quantities.insert(name.to_string(), value);
    }

    fn set_flag(&mut self, name: &str, value: bool) {
        self.set(name, if value { 1.0 } else { 0.0 });
    }

    fn add_budget(&mut self, b: &CouplingBudget) {
        self.set("epsilon", b.epsilon);
        self.set("epsilon_abs", b.epsilon.abs());
        self.set("g0_hz", angular_to_hz(b.g0.abs()));
        self.set("gN_hz", angular_to_hz(b.g_n.abs()));
        self.set("gamma_m_dec_hz", angular_to_hz(b.gamma_m_dec));
        self.set("gamma_a_dec_hz", angular_to_hz(b.gamma_a_dec));
        self.set("n_th", b.n_th);
        self.set("n_atoms", b.n_atoms as f64);
        self.set("effective_omega_a_hz", angular_to_hz(b.effective_omega_a));
        self.set("detuning_hz", angular_to_hz(b.detuning));
        self.set_flag("strong_coupling", b.strong_coupling);
        self.budget = Some(b.record());
        self.warnings.extend(b.warnings.iter().cloned());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckVerdict {
    pub id: String,
    pub preset: String,
    pub quantity: String,
    pub target: Option<f64>,
    pub computed: Option<f64>,
    pub tolerance: String,
    pub source: String,
    pub pass: bool,
}

impl CheckBlock {
    pub fn validate(&self) -> Result<()> {
        let needs_target =
            self.rel_tol.is_some() || self.abs_tol.is_some() || self.factor.is_some() || self.exact;
        if needs_target && self.target.is_none() {
            return Err(config_err(format!(
                "check {}: tolerance given without target",
                self.id
            )));
        }
        if !needs_target && self.min.is_none() && self.max.is_none() {
            return Err(config_err(format!("check {}: no criterion", self.id)));
        }
        if matches!(self.factor, Some(f) if f < 1.0) {
            return Err(config_err(format!(
                "check {}: factor must be >= 1",
                self.id
            )));
        }
        if !matches!(self.source.as_str(), "published" | "derived" | "chosen") {
            return Err(config_err(format!(
                "check {}: source must be published, derived or chosen",
                self.id
            )));
        }
        Ok(())
    }

    pub fn tolerance_text(&self) -> String {
        let mut parts = Vec::new();
        if self.exact {
            parts.push("exact".to_string());
        }
        if let Some(r) = self.rel_tol {
            parts.push(format!("rel {r:e}"));
        }
        if let Some(a) = self.abs_tol {
            parts.push(format!("abs {a:e}"));
        }
        if let Some(f) = self.factor {
            parts.push(format!("factor {f}"));
        }
        if let Some(m) = self.min {
            parts.push(format!(">= {m:e}"));
        }
        if let Some(m) = self.max {
            parts.push(format!("<= {m:e}"));
        }
        parts.join(", ")
    }

    pub fn grade(&self, preset: &str, computed: Option<f64>) -> CheckVerdict {
        let pass = match computed {
            Some(x) if x.is_finite() => {
                let t = self.target.unwrap_or(f64::NAN);
                (!self.exact || x == t)
                    && self.rel_tol.is_none_or(|r| (x - t).abs() <= r * t.abs())
                    && self.abs_tol.is_none_or(|a| (x - t).abs() <= a)
                    && self.factor.is_none_or(|f| x >= t / f && x <= t * f)
                    && self.min.is_none_or(|m| x >= m)
                    && self.max.is_none_or(|m| x <= m)
            }
            _ => false,
        };
        CheckVerdict {
            id: self.id.clone(),
            preset: preset.to_string(),
            quantity: self.quantity.clone(),
            target: self.target,
            computed,
            tolerance: self.tolerance_text(),
            source: self.source.clone(),
            pass,
        }
    }
}
