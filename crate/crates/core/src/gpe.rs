//! One-dimensional Gross-Pitaevskii solver for a condensate held in a
//! surface-deformed trap while the surface oscillates: ground state by
//! imaginary time, real-time split-step evolution with an absorber beyond the
//! barrier, contrast and resonance spectroscopy.
//!
//! The wavefunction is normalized to the atom number, `sum |psi|^2 dz = N`.
//! The surface sits below the atoms as in [`crate::trapscape`]; the drive moves
//! it to `Z_m(t) = Z_m,0 + b sin(omega_p t + phase)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::physcore::HBAR;
use crate::schemes::Placement;
use crate::trapscape::{CombinedPotential1D, SurfaceTrapFamily};

/// Imaginary-time stop: per-step change of the energy per atom, relative to
/// max(|E|, hbar omega_a).
pub const ENERGY_TOL: f64 = 1e-12;
pub const MAX_GROUND_ITERATIONS: usize = 400_000;
/// Grid points required per oscillator length, healing length and barrier width.
pub const POINTS_PER_LENGTH: f64 = 8.0;
/// Real-time steps required per trap, drive and nonlinear period.
pub const MIN_STEPS_PER_PERIOD: f64 = 20.0;
/// Depth of the potential floor below the saddle, in hbar omega_a. Keeps the
/// phase gradient of atoms falling towards the surface resolvable.
pub const FLOOR_DEPTH_QUANTA: f64 = 30.0;
/// Peaks in a spectrum must stand this many decades above their surroundings.
pub const PEAK_PROMINENCE_DECADES: f64 = 1.0;
/// Responses below this are treated as flat.
pub const PEAK_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// m
    pub z_min: f64,
    /// m, excluded (periodic grid)
    pub z_max: f64,
    pub points: usize,
}

impl Grid {
    pub fn validate(&self) -> Result<()> {
        ensure(self.z_max > self.z_min, || {
            "grid needs z_max > z_min".into()
        })?;
        ensure(self.points >= 16 && self.points.is_power_of_two(), || {
            format!(
                "grid points must be a power of two >= 16, got {}",
                self.points
            )
        })
    }

    pub fn spacing(&self) -> f64 {
        (self.z_max - self.z_min) / self.points as f64
    }

    pub fn positions(&self) -> Vec<f64> {
        let dz = self.spacing();
        (0..self.points)
            .map(|i| self.z_min + i as f64 * dz)
            .collect()
    }

    /// Angular wavenumbers in FFT order, 1/m.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.points as i64;
        let dk = 2.0 * PI / (self.z_max - self.z_min);
        (0..n)
            .map(|j| if j < n / 2 { j } else { j - n } as f64 * dk)
            .collect()
    }

    pub fn refined(&self) -> Grid {
        Grid {
            points: 2 * self.points,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Drive {
    /// b, m
    pub amplitude: f64,
    /// omega_p, rad/s
    pub frequency: f64,
    /// rad
    pub phase: f64,
}

impl Drive {
    pub fn displacement(&self, t: f64) -> f64 {
        if self.amplitude == 0.0 {
            0.0
        } else {
            self.amplitude * (self.frequency * t + self.phase).sin()
        }
    }
}

/// Negative imaginary potential between the grid edge and `saddle - start_offset`,
/// ramped as `strength (1 - cos)/2` towards the edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Absorber {
    /// m
    pub start_offset: f64,
    /// J
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GpeConfig {
    pub grid: Grid,
    /// The atom species is the potential's.
    pub potential: CombinedPotential1D,
    pub n_atoms: f64,
    /// g_1D, J m
    pub interaction_1d: f64,
    pub drive: Drive,
    pub absorber: Option<Absorber>,
    /// Real-time step, s
    pub timestep: f64,
    /// Optional uniform loss of atoms, 1/s
    pub loss_rate: f64,
}

/// Static trap quantities the solver needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrapGeometry {
    /// m
    pub minimum: f64,
    /// rad/s
    pub frequency: f64,
    /// m
    pub saddle: Option<f64>,
    /// J
    pub barrier_height: f64,
    /// Potential at the minimum, J
    pub minimum_value: f64,
}

impl GpeConfig {
    pub fn mass(&self) -> f64 {
        self.potential.atom.mass
    }

    pub fn geometry(&self) -> Result<TrapGeometry> {
        let a = self.potential.analyze()?;
        let b = a
            .bound
            .ok_or_else(|| Error::Regime("trap has vanished; no condensate to prepare".into()))?;
        Ok(TrapGeometry {
            minimum: b.minimum_position,
            frequency: b.effective_frequency,
            saddle: b.saddle_position,
            barrier_height: b.barrier_height,
            minimum_value: self.potential.value(b.minimum_position),
        })
    }

    /// Peak density estimate used for the healing length: the smaller of the
    /// Thomas-Fermi and non-interacting values.
    fn peak_density(&self, omega: f64) -> f64 {
        let m = self.mass();
        let a_ho = (HBAR / (m * omega)).sqrt();
        let gaussian = self.n_atoms / (PI.sqrt() * a_ho);
        if self.interaction_1d > 0.0 {
            let mu = thomas_fermi_mu(self.n_atoms, self.interaction_1d, m, omega);
            gaussian.min(mu / self.interaction_1d)
        } else {
            gaussian
        }
    }

    /// Largest real-time step allowed for this configuration.
    pub fn step_bound(&self, geo: &TrapGeometry) -> f64 {
        let mut fastest = geo.frequency;
        if self.drive.amplitude != 0.0 {
            fastest = fastest.max(self.drive.frequency.abs());
        }
        if self.interaction_1d > 0.0 {
            fastest = fastest.max(self.interaction_1d * self.peak_density(geo.frequency) / HBAR);
        }
        2.0 * PI / fastest / MIN_STEPS_PER_PERIOD
    }

    pub fn validate(&self) -> Result<TrapGeometry> {
        self.grid.validate()?;
        ensure(self.n_atoms > 0.0, || "atom number must be positive".into())?;
        ensure(self.interaction_1d >= 0.0, || "g_1D must be >= 0".into())?;
        ensure(self.timestep > 0.0, || "time step must be positive".into())?;
        ensure(self.loss_rate >= 0.0, || "loss rate must be >= 0".into())?;
        let geo = self.geometry()?;
        let g = &self.grid;
        ensure(geo.minimum > g.z_min && geo.minimum < g.z_max, || {
            "trap minimum lies outside the grid".into()
        })?;

        let m = self.mass();
        let mut lengths = vec![("oscillator length", (HBAR / (m * geo.frequency)).sqrt())];
        if self.interaction_1d > 0.0 {
            let n = self.peak_density(geo.frequency);
            lengths.push((
                "healing length",
                HBAR / (2.0 * m * self.interaction_1d * n).sqrt(),
            ));
        }
        if let Some(s) = geo.saddle {
            lengths.push(("barrier width", geo.minimum - s));
        }
        let dz = g.spacing();
        for (what, l) in lengths {
            if dz * POINTS_PER_LENGTH > l {
                return Err(Error::Regime(format!(
                    "grid spacing {dz:e} m resolves the {what} {l:e} m with fewer than {POINTS_PER_LENGTH} points"
                )));
            }
        }

        if let Some(a) = &self.absorber {
            let s = geo
                .saddle
                .ok_or_else(|| Error::config("an absorber needs a barrier saddle to sit behind"))?;
            ensure(a.start_offset >= 0.0 && a.strength >= 0.0, || {
                "absorber offset and strength must be >= 0".into()
            })?;
            ensure(s - a.start_offset > g.z_min + dz, || {
                "absorber start lies outside the grid".into()
            })?;
        }

        let bound = self.step_bound(&geo);
        if self.timestep > bound {
            return Err(Error::StepBound {
                step: self.timestep,
                bound,
            });
        }
        Ok(geo)
    }
}

/// 1D Thomas-Fermi chemical potential in a harmonic trap,
/// `mu = (3 g N omega sqrt(m) / 4 sqrt(2))^(2/3)`.
pub fn thomas_fermi_mu(n_atoms: f64, g1d: f64, mass: f64, omega: f64) -> f64 {
    (3.0 * g1d * n_atoms * omega * mass.sqrt() / (4.0 * 2f64.sqrt())).powf(2.0 / 3.0)
}

/// g_1D giving a Thomas-Fermi chemical potential `mu` for N atoms.
pub fn interaction_for_mu(mu: f64, n_atoms: f64, mass: f64, omega: f64) -> f64 {
    (32.0 * mu.powi(3) / mass).sqrt() / (3.0 * n_atoms * omega)
}

struct Propagator {
    n: usize,
    dz: f64,
    z: Vec<f64>,
    /// hbar k^2 / 2m, rad/s
    kinetic: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    /// W / hbar, rad/s
    absorber: Vec<f64>,
    floor: f64,
    clip: f64,
    surface: f64,
    pot: CombinedPotential1D,
    /// g_1D / hbar
    g: f64,
}

impl Propagator {
    fn new(cfg: &GpeConfig, geo: &TrapGeometry) -> Self {
        let n = cfg.grid.points;
        let z = cfg.grid.positions();
        let dz = cfg.grid.spacing();
        let m = cfg.mass();
        let kinetic = cfg
            .grid
            .wavenumbers()
            .iter()
            .map(|k| HBAR * k * k / (2.0 * m))
            .collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let scratch_len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        let floor = match geo.saddle {
            Some(s) => cfg.potential.value(s) - FLOOR_DEPTH_QUANTA * HBAR * geo.frequency,
            None => f64::NEG_INFINITY,
        };
        let absorber = match (&cfg.absorber, geo.saddle) {
            (Some(a), Some(s)) => {
                let start = s - a.start_offset;
                let len = start - cfg.grid.z_min;
                z.iter()
                    .map(|&zi| {
                        if zi < start {
                            a.strength / HBAR * 0.5 * (1.0 - (PI * (start - zi) / len).cos())
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
            _ => vec![0.0; n],
        };
        Propagator {
            n,
            dz,
            z,
            kinetic,
            fwd,
            inv,
            scratch: vec![Complex64::default(); scratch_len],
            absorber,
            floor,
            clip: dz,
            surface: cfg.potential.surface_position,
            pot: cfg.potential.clone(),
            g: cfg.interaction_1d / HBAR,
        }
    }

    /// V(z) / hbar with the surface displaced by `shift`.
    fn potential(&self, shift: f64, out: &mut [f64]) {
        let zm = self.surface + shift;
        for (o, &z) in out.iter_mut().zip(&self.z) {
            *o = self.pot.value_displaced(z, zm, self.clip).max(self.floor) / HBAR;
        }
    }

    fn norm(&self, psi: &[Complex64]) -> f64 {
        psi.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.dz
    }

    fn kinetic_step(&mut self, psi: &mut [Complex64], factor: &[Complex64]) {
        self.fwd.process_with_scratch(psi, &mut self.scratch);
        let s = 1.0 / self.n as f64;
        for (c, f) in psi.iter_mut().zip(factor) {
            *c *= f * s;
        }
        self.inv.process_with_scratch(psi, &mut self.scratch);
    }

    /// (energy, chemical potential) per atom in units of hbar (rad/s).
    fn energy(&mut self, psi: &[Complex64], v: &[f64]) -> (f64, f64) {
        let mut buf = psi.to_vec();
        self.fwd.process_with_scratch(&mut buf, &mut self.scratch);
        let kin: f64 = buf
            .iter()
            .zip(&self.kinetic)
            .map(|(c, t)| c.norm_sqr() * t)
            .sum::<f64>()
            * self.dz
            / self.n as f64;
        let mut pot = 0.0;
        let mut int = 0.0;
        for (c, vi) in psi.iter().zip(v) {
            let d = c.norm_sqr();
            pot += vi * d;
            int += self.g * d * d;
        }
        pot *= self.dz;
        int *= self.dz;
        let n = self.norm(psi);
        ((kin + pot + 0.5 * int) / n, (kin + pot + int) / n)
    }

    fn com(&self, psi: &[Complex64]) -> f64 {
        let w: f64 = psi
            .iter()
            .zip(&self.z)
            .map(|(c, z)| c.norm_sqr() * z)
            .sum::<f64>()
            * self.dz;
        w / self.norm(psi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundStateOptions {
    /// Imaginary-time step, s; defaults to 1/200 of the trap period.
    pub step: Option<f64>,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            step: None,
            tolerance: ENERGY_TOL,
            max_iterations: MAX_GROUND_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundState {
    #[serde(skip)]
    pub psi: Vec<Complex64>,
    /// mu_c, J
    pub chemical_potential: f64,
    /// J
    pub energy_per_atom: f64,
    /// mu_c - V(minimum), J
    pub mu_above_minimum: f64,
    pub iterations: usize,
    pub geometry: TrapGeometry,
}

pub fn ground_state(cfg: &GpeConfig) -> Result<GroundState> {
    ground_state_with(cfg, &GroundStateOptions::default())
}

/// Imaginary-time split-step propagation. Below the saddle the potential is
/// held at the saddle value so the state cannot settle against the surface.
pub fn ground_state_with(cfg: &GpeConfig, opts: &GroundStateOptions) -> Result<GroundState> {
    let geo = cfg.validate()?;
    let mut p = Propagator::new(cfg, &geo);
    let tau = opts.step.unwrap_or(2.0 * PI / geo.frequency / 200.0);
    ensure(tau > 0.0, || "imaginary-time step must be positive".into())?;

    let mut v = vec![0.0; p.n];
    p.potential(0.0, &mut v);
    if let Some(s) = geo.saddle {
        let vs = cfg.potential.value(s) / HBAR;
        for (vi, &z) in v.iter_mut().zip(&p.z) {
            if z < s {
                *vi = vi.max(vs);
            }
        }
    }

    let m = cfg.mass();
    let a_ho = (HBAR / (m * geo.frequency)).sqrt();
    let width = if cfg.interaction_1d > 0.0 {
        let mu = thomas_fermi_mu(cfg.n_atoms, cfg.interaction_1d, m, geo.frequency);
        a_ho.max(0.5 * (2.0 * mu / (m * geo.frequency * geo.frequency)).sqrt())
    } else {
        a_ho
    };
    let mut psi: Vec<Complex64> =
        p.z.iter()
            .map(|z| {
                Complex64::new(
                    (-(z - geo.minimum).powi(2) / (2.0 * width * width)).exp(),
                    0.0,
                )
            })
            .collect();
    let renorm = |p: &Propagator, psi: &mut [Complex64]| {
        let s = (cfg.n_atoms / p.norm(psi)).sqrt();
        psi.iter_mut().for_each(|c| *c *= s);
    };
    renorm(&p, &mut psi);

    let kin: Vec<Complex64> = p
        .kinetic
        .iter()
        .map(|t| Complex64::new((-t * tau).exp(), 0.0))
        .collect();
    let scale = HBAR * geo.frequency;
    let mut e_prev = p.energy(&psi, &v).0;
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iterations {
        for (c, vi) in psi.iter_mut().zip(&v) {
            *c *= (-(vi + p.g * c.norm_sqr()) * tau * 0.5).exp();
        }
        p.kinetic_step(&mut psi, &kin);
        for (c, vi) in psi.iter_mut().zip(&v) {
            *c *= (-(vi + p.g * c.norm_sqr()) * tau * 0.5).exp();
        }
        renorm(&p, &mut psi);
        let (e, mu) = p.energy(&psi, &v);
        residual = (e - e_prev).abs() * HBAR / (e.abs() * HBAR).max(scale);
        e_prev = e;
        if residual < opts.tolerance {
            let state = GroundState {
                psi,
                chemical_potential: mu * HBAR,
                energy_per_atom: e * HBAR,
                mu_above_minimum: mu * HBAR - geo.minimum_value,
                iterations: it,
                geometry: geo,
            };
            if let Some(s) = geo.saddle {
                let u0 = geo.barrier_height;
                if state.mu_above_minimum >= u0 {
                    return Err(Error::Regime(format!(
                        "condensate not bound: mu_c {:e} J above the minimum exceeds the barrier {u0:e} J (saddle at {s:e} m)",
                        state.mu_above_minimum
                    )));
                }
            }
            return Ok(state);
        }
    }
    Err(Error::NoConvergence {
        solver: "imaginary-time ground state",
        iterations: opts.max_iterations,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// s
    pub duration: f64,
    /// Observables are recorded about this often; `None` records start and end only.
    pub sample_interval: Option<f64>,
    /// Wavefunction snapshots are taken at the steps nearest these times, s.
    pub snapshot_times: Vec<f64>,
}

impl EvolveOptions {
    pub fn new(duration: f64) -> Self {
        Self {
            duration,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GpeSample {
    /// s
    pub t: f64,
    /// N(t) / N(0)
    pub norm: f64,
    /// <z>, m
    pub com: f64,
    /// Energy per atom with the instantaneous potential, absorber excluded, J
    pub energy_per_atom: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub psi: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GpeResult {
    pub grid: Grid,
    pub samples: Vec<GpeSample>,
    #[serde(skip)]
    pub snapshots: Vec<Snapshot>,
    /// Step actually used (duration split into equal steps), s
    pub step: f64,
    pub steps: usize,
    /// N(T) / N(0)
    pub remaining_fraction: f64,
    /// 1 - |<psi_0|psi(T)>|^2 / N(0)^2: fraction driven out of the initial state
    pub depletion: f64,
    #[serde(skip)]
    pub final_psi: Vec<Complex64>,
}

impl GpeResult {
    pub const SAMPLE_COLUMNS: &'static str = "t_s,norm_fraction,com_m,energy_per_atom_j";

    pub fn samples_csv(&self) -> String {
        let mut out = format!("{}\n", Self::SAMPLE_COLUMNS);
        for s in &self.samples {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e}\n",
                s.t, s.norm, s.com, s.energy_per_atom
            ));
        }
        out
    }

    pub fn snapshot_csv(&self, index: usize) -> Option<String> {
        let snap = self.snapshots.get(index)?;
        Some(wavefunction_csv(&self.grid, &snap.psi))
    }

    /// Peak-to-peak excursion of <z> over the recorded samples, m.
    pub fn com_excursion(&self) -> f64 {
        let (lo, hi) = self
            .samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                (lo.min(s.com), hi.max(s.com))
            });
        hi - lo
    }
}

/// Columns z, |psi|^2, Re psi, Im psi.
pub fn wavefunction_csv(grid: &Grid, psi: &[Complex64]) -> String {
    let mut out = String::from("z_m,density_per_m,re_psi,im_psi\n");
    for (z, c) in grid.positions().iter().zip(psi) {
        out.push_str(&format!("{z:e},{:e},{:e},{:e}\n", c.norm_sqr(), c.re, c.im));
    }
    out
}

/// Real-time split-step evolution from `initial` (normally the ground state).
pub fn evolve(cfg: &GpeConfig, initial: &GroundState, opts: &EvolveOptions) -> Result<GpeResult> {
    let geo = cfg.validate()?;
    ensure(initial.psi.len() == cfg.grid.points, || {
        "initial state does not match the grid".into()
    })?;
    ensure(opts.duration >= 0.0, || "duration must be >= 0".into())?;
    let mut p = Propagator::new(cfg, &geo);
    let steps = (opts.duration / cfg.timestep).ceil().max(1.0) as usize;
    let h = opts.duration / steps as f64;

    let kin: Vec<Complex64> = p
        .kinetic
        .iter()
        .map(|t| Complex64::from_polar(1.0, -t * h))
        .collect();
    let damp: Vec<f64> = p
        .absorber
        .iter()
        .map(|w| (-(w + 0.5 * cfg.loss_rate) * h * 0.5).exp())
        .collect();
    let stride = match opts.sample_interval {
        Some(dt) if dt > 0.0 => ((dt / h).round() as usize).max(1),
        _ => steps,
    };
    let mut snap_steps: Vec<(usize, f64)> = opts
        .snapshot_times
        .iter()
        .map(|&t| (((t / h).round().max(0.0) as usize).min(steps), t))
        .collect();
    snap_steps.sort_by_key(|s| s.0);

    let mut psi = initial.psi.clone();
    let n0 = p.norm(&psi);
    let mut v = vec![0.0; p.n];
    let mut samples = Vec::new();
    let mut snapshots = Vec::new();
    let mut next_snap = 0;
    let static_v = cfg.drive.amplitude == 0.0;
    if static_v {
        p.potential(0.0, &mut v);
    }

    let mut record = |p: &mut Propagator, psi: &[Complex64], k: usize, v: &mut [f64]| {
        let t = k as f64 * h;
        if !static_v {
            p.potential(cfg.drive.displacement(t), v);
        }
        let (e, _) = p.energy(psi, v);
        samples.push(GpeSample {
            t,
            norm: p.norm(psi) / n0,
            com: p.com(psi),
            energy_per_atom: e * HBAR,
        });
    };
    let mut take_snaps = |psi: &[Complex64], k: usize, next: &mut usize| {
        while *next < snap_steps.len() && snap_steps[*next].0 == k {
            snapshots.push(Snapshot {
                t: k as f64 * h,
                psi: psi.to_vec(),
            });
            *next += 1;
        }
    };

    record(&mut p, &psi, 0, &mut v);
    take_snaps(&psi, 0, &mut next_snap);
    for k in 0..steps {
        if !static_v {
            let t_mid = (k as f64 + 0.5) * h;
            p.potential(cfg.drive.displacement(t_mid), &mut v);
        }
        half_potential_step(&mut psi, &v, &damp, p.g, h);
        p.kinetic_step(&mut psi, &kin);
        half_potential_step(&mut psi, &v, &damp, p.g, h);
        if (k + 1) % stride == 0 || k + 1 == steps {
            record(&mut p, &psi, k + 1, &mut v);
        }
        take_snaps(&psi, k + 1, &mut next_snap);
    }

    let overlap: Complex64 = initial
        .psi
        .iter()
        .zip(&psi)
        .map(|(a, b)| a.conj() * b)
        .sum::<Complex64>()
        * p.dz;
    let depletion = (1.0 - overlap.norm_sqr() / (n0 * n0)).max(0.0);
    Ok(GpeResult {
        grid: cfg.grid,
        remaining_fraction: p.norm(&psi) / n0,
        samples,
        snapshots,
        step: h,
        steps,
        depletion,
        final_psi: psi,
    })
}

fn half_potential_step(psi: &mut [Complex64], v: &[f64], damp: &[f64], g: f64, h: f64) {
    for ((c, vi), d) in psi.iter_mut().zip(v).zip(damp) {
        let phase = -(vi + g * c.norm_sqr()) * h * 0.5;
        *c *= Complex64::from_polar(*d, phase);
    }
}

/// Run metadata for snapshot export.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata<'a> {
    pub config: &'a GpeConfig,
    pub options: &'a EvolveOptions,
    pub ground_state: &'a GroundState,
    pub result: &'a GpeResult,
    pub energy_tolerance: f64,
    pub floor_depth_quanta: f64,
    pub grid_spacing_m: f64,
}

impl<'a> RunMetadata<'a> {
    pub fn new(
        config: &'a GpeConfig,
        options: &'a EvolveOptions,
        ground_state: &'a GroundState,
        result: &'a GpeResult,
    ) -> Self {
        Self {
            config,
            options,
            ground_state,
            result,
            energy_tolerance: ENERGY_TOL,
            floor_depth_quanta: FLOOR_DEPTH_QUANTA,
            grid_spacing_m: config.grid.spacing(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContrastPoint {
    /// b, m
    pub amplitude: f64,
    /// omega_p, rad/s
    pub drive_frequency: f64,
    /// N_a / N(0)
    pub remaining_driven: f64,
    /// N_r / N(0)
    pub remaining_reference: f64,
    /// (N_r - N_a) / N_r clipped to [0, 1]
    pub contrast: f64,
    pub raw_contrast: f64,
    pub depletion: f64,
}

fn undriven(cfg: &GpeConfig) -> GpeConfig {
    GpeConfig {
        drive: Drive {
            amplitude: 0.0,
            ..cfg.drive
        },
        ..cfg.clone()
    }
}

fn contrast_point(
    cfg: &GpeConfig,
    ground: &GroundState,
    reference: f64,
    duration: f64,
) -> Result<ContrastPoint> {
    let r = evolve(cfg, ground, &EvolveOptions::new(duration))?;
    let raw = (reference - r.remaining_fraction) / reference;
    Ok(ContrastPoint {
        amplitude: cfg.drive.amplitude,
        drive_frequency: cfg.drive.frequency,
        remaining_driven: r.remaining_fraction,
        remaining_reference: reference,
        contrast: raw.clamp(0.0, 1.0),
        raw_contrast: raw,
        depletion: r.depletion,
    })
}

/// Contrast of one driven run against an undriven reference of equal duration.
pub fn contrast(cfg: &GpeConfig, duration: f64) -> Result<ContrastPoint> {
    let ground = ground_state(cfg)?;
    let reference = evolve(&undriven(cfg), &ground, &EvolveOptions::new(duration))?;
    contrast_point(cfg, &ground, reference.remaining_fraction, duration)
}

/// Contrast versus drive amplitude; `b_grid` must be non-decreasing.
pub fn contrast_curve(
    cfg: &GpeConfig,
    b_grid: &[f64],
    duration: f64,
) -> Result<Vec<ContrastPoint>> {
    ensure(b_grid.windows(2).all(|w| w[1] >= w[0]), || {
        "amplitude grid must be non-decreasing".into()
    })?;
    ensure(b_grid.iter().all(|b| *b >= 0.0), || {
        "amplitudes must be >= 0".into()
    })?;
    let ground = ground_state(cfg)?;
    let reference =
        evolve(&undriven(cfg), &ground, &EvolveOptions::new(duration))?.remaining_fraction;
    b_grid
        .iter()
        .map(|&b| {
            let c = GpeConfig {
                drive: Drive {
                    amplitude: b,
                    ..cfg.drive
                },
                ..cfg.clone()
            };
            contrast_point(&c, &ground, reference, duration)
        })
        .collect()
}

/// Driven amplitude of a damped oscillator normalized to `b0` on resonance.
pub fn lorentzian_amplitude(b0: f64, omega_p: f64, omega_m: f64, q: f64) -> f64 {
    let num = omega_m * omega_m / q;
    let den =
        ((omega_m * omega_m - omega_p * omega_p).powi(2) + (omega_p * omega_m / q).powi(2)).sqrt();
    b0 * num / den
}

/// Contrast versus drive frequency with the surface amplitude following the
/// cantilever response: `b(omega_p) = lorentzian_amplitude(b, omega_p, omega_m, q)`.
pub fn frequency_sweep(
    cfg: &GpeConfig,
    omega_p_grid: &[f64],
    omega_m: f64,
    q: f64,
    duration: f64,
) -> Result<Vec<ContrastPoint>> {
    ensure(omega_m > 0.0 && q > 0.0, || {
        "omega_m and Q must be positive".into()
    })?;
    let ground = ground_state(cfg)?;
    let reference =
        evolve(&undriven(cfg), &ground, &EvolveOptions::new(duration))?.remaining_fraction;
    omega_p_grid
        .iter()
        .map(|&wp| {
            let c = GpeConfig {
                drive: Drive {
                    amplitude: lorentzian_amplitude(cfg.drive.amplitude, wp, omega_m, q),
                    frequency: wp,
                    phase: cfg.drive.phase,
                },
                ..cfg.clone()
            };
            contrast_point(&c, &ground, reference, duration)
        })
        .collect()
}

/// A condensate in a surface trap with the simulation grid and absorber laid
/// out around it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceGpeSetup {
    /// `family.frequency` is omega_a.
    pub family: SurfaceTrapFamily,
    /// Trap placement, re-solved at every trap frequency.
    pub placement: Placement,
    pub n_atoms: f64,
    /// J m
    pub interaction_1d: f64,
    pub drive: Drive,
    /// Grid starts this far below the saddle, m.
    pub below_saddle: f64,
    /// Grid ends this far above the minimum, m.
    pub above_minimum: f64,
    pub points: usize,
    /// m
    pub absorber_offset: f64,
    /// Absorber strength in hbar omega_a.
    pub absorber_quanta: f64,
    /// Real-time steps per period of the faster of trap and drive.
    pub steps_per_period: f64,
    /// 1/s
    pub loss_rate: f64,
}

impl SurfaceGpeSetup {
    pub fn with_trap_frequency(&self, omega_a: f64) -> Self {
        let mut s = self.clone();
        s.family.frequency = omega_a;
        s
    }

    pub fn with_amplitude(&self, b: f64) -> Self {
        let mut s = self.clone();
        s.drive.amplitude = b;
        s
    }

    pub fn config(&self) -> Result<GpeConfig> {
        let d = match self.placement {
            Placement::Distance(d) => d,
            Placement::Barrier(u0) => self.family.distance_for_barrier(u0)?,
        };
        let potential = self.family.potential_at(d)?;
        let bound = potential
            .analyze()?
            .bound
            .ok_or_else(|| Error::Regime("trap vanished at the requested barrier".into()))?;
        let saddle = bound
            .saddle_position
            .ok_or_else(|| Error::Regime("surface potential forms no barrier".into()))?;
        let wa = self.family.frequency;
        let fastest = wa.max(self.drive.frequency.abs());
        Ok(GpeConfig {
            grid: Grid {
                z_min: saddle - self.below_saddle,
                z_max: bound.minimum_position + self.above_minimum,
                points: self.points,
            },
            potential,
            n_atoms: self.n_atoms,
            interaction_1d: self.interaction_1d,
            drive: self.drive,
            absorber: Some(Absorber {
                start_offset: self.absorber_offset,
                strength: self.absorber_quanta * HBAR * wa,
            }),
            timestep: 2.0 * PI / fastest / self.steps_per_period,
            loss_rate: self.loss_rate,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectroscopyRow {
    /// rad/s
    pub omega_a: f64,
    /// Trap distance from the surface, m
    pub distance: f64,
    pub epsilon: f64,
    /// (mu_c - V_min) / hbar omega_a
    pub mu_quanta: f64,
    /// 1 - N(T)/N(0)
    pub loss: f64,
    pub depletion: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub position: f64,
    pub height: f64,
    /// decades
    pub prominence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub rows: Vec<SpectroscopyRow>,
    /// Peaks of the depletion response, highest first.
    pub peaks: Vec<Peak>,
}

impl Spectrum {
    pub const COLUMNS: &'static str = "omega_a_hz,distance_m,epsilon,mu_quanta,loss,depletion";

    pub fn csv(&self) -> String {
        let mut out = format!("{}\n", Self::COLUMNS);
        for r in &self.rows {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e},{:e}\n",
                r.omega_a / (2.0 * PI),
                r.distance,
                r.epsilon,
                r.mu_quanta,
                r.loss,
                r.depletion
            ));
        }
        out
    }
}

/// One point of [`mode_spectroscopy`]: re-solve the trap at omega_a, prepare
/// the ground state and drive it for `duration`.
pub fn spectroscopy_point(
    setup: &SurfaceGpeSetup,
    omega_a: f64,
    duration: f64,
) -> Result<SpectroscopyRow> {
    let s = setup.with_trap_frequency(omega_a);
    let cfg = s.config()?;
    let analysis = cfg.potential.analyze()?;
    let bound = analysis.bound.as_ref().expect("config() checked the trap");
    let ground = ground_state(&cfg)?;
    let r = evolve(&cfg, &ground, &EvolveOptions::new(duration))?;
    Ok(SpectroscopyRow {
        omega_a,
        distance: bound.distance,
        epsilon: bound.epsilon,
        mu_quanta: ground.mu_above_minimum / (HBAR * omega_a),
        loss: 1.0 - r.remaining_fraction,
        depletion: r.depletion,
    })
}

/// Response versus trap frequency at fixed drive. Peaks are located on the
/// depletion, which keeps resolving weak resonances where the loss is tiny.
pub fn mode_spectroscopy(
    setup: &SurfaceGpeSetup,
    omega_a_grid: &[f64],
    duration: f64,
) -> Result<Spectrum> {
    let rows = omega_a_grid
        .iter()
        .map(|&w| spectroscopy_point(setup, w, duration))
        .collect::<Result<Vec<_>>>()?;
    Ok(annotate(rows))
}

pub fn annotate(rows: Vec<SpectroscopyRow>) -> Spectrum {
    let xs: Vec<f64> = rows.iter().map(|r| r.omega_a).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.depletion).collect();
    let peaks = find_peaks(&xs, &ys, PEAK_PROMINENCE_DECADES, PEAK_FLOOR);
    Spectrum { rows, peaks }
}

/// Interior local maxima of `ys` above `floor` whose prominence on a log10
/// scale is at least `min_prominence` decades, highest first.
pub fn find_peaks(xs: &[f64], ys: &[f64], min_prominence: f64, floor: f64) -> Vec<Peak> {
    let n = ys.len();
    let l: Vec<f64> = ys.iter().map(|y| y.max(1e-300).log10()).collect();
    let mut peaks = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if !(l[i] > l[i - 1] && l[i] >= l[i + 1]) || ys[i] < floor {
            continue;
        }
        let mut left = l[i];
        for j in (0..i).rev() {
            if l[j] > l[i] {
                break;
            }
            left = left.min(l[j]);
        }
        let mut right = l[i];
        for &lj in &l[i + 1..] {
            if lj > l[i] {
                break;
            }
            right = right.min(lj);
        }
        let prominence = l[i] - left.max(right);
        if prominence >= min_prominence {
            peaks.push(Peak {
                position: xs[i],
                height: ys[i],
                prominence,
            });
        }
    }
    peaks.sort_by(|a, b| b.height.total_cmp(&a.height));
    peaks
}
