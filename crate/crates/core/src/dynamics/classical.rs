//! Classical motion of atom and oscillator in the full (untruncated) coupling potential.

use std::fmt::Write as _;

use serde::Serialize;

use crate::coupling::CoupledPair;
use crate::error::{ensure, Result};
use crate::physcore::HBAR;
use crate::potentials::CouplingPotential;

/// Positions (m), momenta (kg m/s) and time (s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicalState {
    pub t: f64,
    pub z_a: f64,
    pub z_m: f64,
    pub p_a: f64,
    pub p_m: f64,
}

impl ClassicalState {
    pub fn is_finite(&self) -> bool {
        [self.t, self.z_a, self.z_m, self.p_a, self.p_m]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Two harmonic wells plus the coupling potential U_c(z_m - z_a).
///
/// The bare minima are placed so that the static equilibrium sits exactly at
/// the pair's equilibrium distance.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalSystem {
    pub atom_mass: f64,
    pub oscillator_mass: f64,
    pub bare_omega_a: f64,
    pub bare_omega_m: f64,
    pub potential: CouplingPotential,
    /// Equilibrium positions (z_a, z_m).
    pub equilibrium: (f64, f64),
    /// Hold the oscillator at rest (infinitely heavy).
    pub clamp_mechanics: bool,
    a: f64,
    p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalOptions {
    /// Local error tolerance in units of the oscillation scale.
    pub tol: f64,
    /// Stored samples are at least this far apart; `None` stores every step.
    pub sample_interval: Option<f64>,
    pub max_steps: usize,
}

impl ClassicalOptions {
    pub fn new(tol: f64) -> Self {
        ClassicalOptions {
            tol,
            sample_interval: None,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub final_state: ClassicalState,
    /// The atom left the potential's validity window (e.g. fell onto the surface).
    pub escaped: bool,
    /// max |H(t) - H(0)| / E_osc over accepted steps.
    pub energy_drift: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalTrajectory {
    pub samples: Vec<ClassicalState>,
    pub summary: RunSummary,
}

impl ClassicalTrajectory {
    pub const COLUMNS: [&'static str; 5] = ["t_s", "z_a_m", "z_m_m", "p_a_kgms", "p_m_kgms"];

    pub fn csv(&self) -> String {
        let mut out = Self::COLUMNS.join(",");
        out.push('\n');
        for s in &self.samples {
            let _ = writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e}",
                s.t, s.z_a, s.z_m, s.p_a, s.p_m
            );
        }
        out
    }
}

/// (1 + u)^-p - 1 + p u without cancellation for small u.
fn remainder2(p: f64, u: f64) -> f64 {
    if u.abs() < 1e-2 {
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..=12 {
            let kf = k as f64;
            term *= -(p + kf - 1.0) / kf * u;
            if k >= 2 {
                sum += term;
            }
        }
        sum
    } else {
        (-p * u.ln_1p()).exp_m1() + p * u
    }
}

impl ClassicalSystem {
    pub fn from_pair(pair: &CoupledPair) -> Result<Self> {
        pair.validate()?;
        let (dza, _) = pair.equilibrium_shifts()?;
        let za = pair.trap.bare_minimum + dza;
        let zm = za + pair.equilibrium_distance;
        let (a, p) = pair.potential.power_law();
        Ok(ClassicalSystem {
            atom_mass: pair.atom.mass,
            oscillator_mass: pair.oscillator.effective_mass,
            bare_omega_a: pair.trap.bare_frequency,
            bare_omega_m: pair.oscillator.frequency,
            potential: pair.potential,
            equilibrium: (za, zm),
            clamp_mechanics: false,
            a,
            p,
        })
    }

    pub fn clamped(mut self) -> Self {
        self.clamp_mechanics = true;
        self
    }

    pub fn equilibrium_distance(&self) -> f64 {
        self.equilibrium.1 - self.equilibrium.0
    }

    pub fn at_rest(&self) -> ClassicalState {
        ClassicalState {
            t: 0.0,
            z_a: self.equilibrium.0,
            z_m: self.equilibrium.1,
            p_a: 0.0,
            p_m: 0.0,
        }
    }

    fn displacements(&self, s: &ClassicalState) -> [f64; 4] {
        [
            s.z_a - self.equilibrium.0,
            s.z_m - self.equilibrium.1,
            s.p_a,
            s.p_m,
        ]
    }

    fn state(&self, t: f64, y: &[f64; 4]) -> ClassicalState {
        ClassicalState {
            t,
            z_a: self.equilibrium.0 + y[0],
            z_m: self.equilibrium.1 + y[1],
            p_a: y[2],
            p_m: y[3],
        }
    }

    /// U'(d + delta) - U'(d).
    fn coupling_force_change(&self, delta: f64) -> f64 {
        let d = self.equilibrium_distance();
        let u = delta / d;
        -self.p * self.a * d.powf(-self.p - 1.0) * (-(self.p + 1.0) * u.ln_1p()).exp_m1()
    }

    fn rhs(&self, y: &[f64; 4]) -> [f64; 4] {
        let m = self.atom_mass;
        let big = self.oscillator_mass;
        let du1 = self.coupling_force_change(y[1] - y[0]);
        let fa = -m * self.bare_omega_a.powi(2) * y[0] + du1;
        if self.clamp_mechanics {
            return [y[2] / m, 0.0, fa, 0.0];
        }
        let fm = -big * self.bare_omega_m.powi(2) * y[1] - du1;
        [y[2] / m, y[3] / big, fa, fm]
    }

    /// Total energy relative to the static equilibrium, J.
    pub fn oscillation_energy(&self, s: &ClassicalState) -> f64 {
        let y = self.displacements(s);
        let d = self.equilibrium_distance();
        let coupling = self.a * d.powf(-self.p) * remainder2(self.p, (y[1] - y[0]) / d);
        let mut e = y[2] * y[2] / (2.0 * self.atom_mass)
            + 0.5 * self.atom_mass * (self.bare_omega_a * y[0]).powi(2)
            + coupling;
        if !self.clamp_mechanics {
            e += y[3] * y[3] / (2.0 * self.oscillator_mass)
                + 0.5 * self.oscillator_mass * (self.bare_omega_m * y[1]).powi(2);
        }
        e
    }

    /// Linearized energy of each body in its own effective well, (E_a, E_m), J.
    pub fn partial_energies(&self, s: &ClassicalState) -> (f64, f64) {
        let y = self.displacements(s);
        let u2 = self.potential_curvature();
        let ka = self.atom_mass * self.bare_omega_a.powi(2) + u2;
        let km = self.oscillator_mass * self.bare_omega_m.powi(2) + u2;
        (
            y[2] * y[2] / (2.0 * self.atom_mass) + 0.5 * ka * y[0] * y[0],
            y[3] * y[3] / (2.0 * self.oscillator_mass) + 0.5 * km * y[1] * y[1],
        )
    }

    fn potential_curvature(&self) -> f64 {
        let d = self.equilibrium_distance();
        self.p * (self.p + 1.0) * self.a * d.powf(-self.p - 2.0)
    }

    /// Normal-mode angular frequencies of the linearized system, ascending.
    pub fn normal_modes(&self) -> (f64, f64) {
        let u2 = self.potential_curvature();
        let wa2 = self.bare_omega_a.powi(2) + u2 / self.atom_mass;
        let wm2 = self.bare_omega_m.powi(2) + u2 / self.oscillator_mass;
        let c = -u2 / (self.atom_mass * self.oscillator_mass).sqrt();
        let k = nalgebra::Matrix2::new(wa2, c, c, wm2);
        let ev = k.symmetric_eigenvalues();
        let (lo, hi) = if ev[0] < ev[1] {
            (ev[0], ev[1])
        } else {
            (ev[1], ev[0])
        };
        (lo.sqrt(), hi.sqrt())
    }

    fn escaped(&self, y: &[f64; 4]) -> bool {
        let d = self.equilibrium_distance() + y[1] - y[0];
        self.potential.check_distance(d).is_err() || y.iter().any(|v| !v.is_finite())
    }

    fn error_scales(&self, e_osc: f64) -> [f64; 4] {
        // oscillation energy sets the scale; one quantum only if the system is at rest
        let e = if e_osc > 0.0 {
            e_osc
        } else {
            HBAR * self.bare_omega_a.max(self.bare_omega_m)
        };
        [
            (e / self.atom_mass).sqrt() / self.bare_omega_a,
            (e / self.oscillator_mass).sqrt() / self.bare_omega_m,
            (self.atom_mass * e).sqrt(),
            (self.oscillator_mass * e).sqrt(),
        ]
    }

    /// Dormand-Prince 5(4). The error per step is held below tol * h / duration so
    /// the accumulated error over the run stays near `tol`. `observer` sees every
    /// accepted state and stops the run by returning false.
    pub fn integrate(
        &self,
        initial: &ClassicalState,
        duration: f64,
        opts: &ClassicalOptions,
        mut observer: impl FnMut(&ClassicalState) -> bool,
    ) -> Result<RunSummary> {
        ensure(opts.tol > 0.0 && opts.tol < 1.0, || {
            "tolerance must lie in (0, 1)".into()
        })?;
        ensure(duration >= 0.0 && duration.is_finite(), || {
            "duration must be >= 0".into()
        })?;
        ensure(initial.is_finite(), || {
            "initial state has non-finite components".into()
        })?;
        let mut y = self.displacements(initial);
        if self.clamp_mechanics {
            y[1] = 0.0;
            y[3] = 0.0;
        }
        if self.escaped(&y) {
            return Err(crate::Error::domain(
                "initial state lies outside the potential's validity window",
            ));
        }
        let e0 = self.oscillation_energy(&self.state(initial.t, &y));
        let e_ref = e0.abs().max(f64::MIN_POSITIVE);
        let scales = self.error_scales(e0);
        let w_max = self.normal_modes().1.max(self.bare_omega_a);
        let t_end = initial.t + duration;
        let mut t = initial.t;
        let mut h_max = 0.5 / w_max;
        if let Some(dt) = opts.sample_interval {
            h_max = h_max.min(dt);
        }
        let mut h = (0.01 / w_max).min(duration.max(f64::MIN_POSITIVE));
        let mut k1 = self.rhs(&y);
        let mut drift: f64 = 0.0;
        let (mut accepted, mut rejected) = (0, 0);
        let mut escaped = false;
        let mut running = observer(&self.state(t, &y));

        while running && t < t_end {
            if accepted + rejected >= opts.max_steps {
                return Err(crate::Error::NoConvergence {
                    solver: "dormand-prince",
                    iterations: accepted + rejected,
                    residual: t_end - t,
                });
            }
            let last = t + h >= t_end;
            if last {
                h = t_end - t;
            }
            let (y5, err, k7) = self.dp_step(&y, &k1, h, &scales);
            let target = (opts.tol * h / duration).max(1e-15);
            if err <= target || h <= 1e-12 / w_max {
                t = if last { t_end } else { t + h };
                y = y5;
                k1 = k7;
                accepted += 1;
                if self.escaped(&y) {
                    escaped = true;
                    observer(&self.state(t, &y));
                    break;
                }
                let s = self.state(t, &y);
                drift = drift.max((self.oscillation_energy(&s) - e0).abs() / e_ref);
                running = observer(&s);
            } else {
                rejected += 1;
            }
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * (target / err).powf(0.25)).clamp(0.2, 5.0)
            };
            h = (h * fac).min(h_max);
        }
        Ok(RunSummary {
            final_state: self.state(t, &y),
            escaped,
            energy_drift: drift,
            accepted_steps: accepted,
            rejected_steps: rejected,
        })
    }

    fn dp_step(
        &self,
        y: &[f64; 4],
        k1: &[f64; 4],
        h: f64,
        scales: &[f64; 4],
    ) -> ([f64; 4], f64, [f64; 4]) {
        const C: [[f64; 6]; 6] = [
            [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
            [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
            [
                19372.0 / 6561.0,
                -25360.0 / 2187.0,
                64448.0 / 6561.0,
                -212.0 / 729.0,
                0.0,
                0.0,
            ],
            [
                9017.0 / 3168.0,
                -355.0 / 33.0,
                46732.0 / 5247.0,
                49.0 / 176.0,
                -5103.0 / 18656.0,
                0.0,
            ],
            [
                35.0 / 384.0,
                0.0,
                500.0 / 1113.0,
                125.0 / 192.0,
                -2187.0 / 6784.0,
                11.0 / 84.0,
            ],
        ];
        const E: [f64; 7] = [
            71.0 / 57600.0,
            0.0,
            -71.0 / 16695.0,
            71.0 / 1920.0,
            -17253.0 / 339200.0,
            22.0 / 525.0,
            -1.0 / 40.0,
        ];
        let mut k = [[0.0; 4]; 7];
        k[0] = *k1;
        let mut stage = [0.0; 4];
        for s in 0..6 {
            for i in 0..4 {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s + 1) {
                    acc += C[s][j] * kj[i];
                }
                stage[i] = y[i] + h * acc;
            }
            k[s + 1] = self.rhs(&stage);
        }
        let y5 = stage;
        let mut err2 = 0.0;
        for i in 0..4 {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            err2 += (h * e / scales[i]).powi(2);
        }
        (y5, (err2 / 4.0).sqrt(), k[6])
    }
}

/// Integrate `pair` from `initial` for `duration` s, storing every accepted step.
pub fn integrate_classical(
    pair: &CoupledPair,
    initial: &ClassicalState,
    duration: f64,
    tol: f64,
) -> Result<ClassicalTrajectory> {
    let sys = ClassicalSystem::from_pair(pair)?;
    let opts = ClassicalOptions::new(tol);
    sample_run(&sys, initial, duration, &opts)
}

pub fn sample_run(
    sys: &ClassicalSystem,
    initial: &ClassicalState,
    duration: f64,
    opts: &ClassicalOptions,
) -> Result<ClassicalTrajectory> {
    let mut samples = Vec::new();
    let mut next = f64::NEG_INFINITY;
    let summary = sys.integrate(initial, duration, opts, |s| {
        if s.t >= next {
            samples.push(*s);
            match opts.sample_interval {
                Some(dt) if dt > 0.0 => {
                    if next == f64::NEG_INFINITY {
                        next = s.t;
                    }
                    while next <= s.t {
                        next += dt;
                    }
                }
                _ => next = s.t,
            }
        }
        true
    })?;
    if samples.last().map(|s| s.t) != Some(summary.final_state.t) {
        samples.push(summary.final_state);
    }
    Ok(ClassicalTrajectory { samples, summary })
}

/// Root in [0, 1] of the cubic Hermite interpolant through (x0, v0) and (x1, v1)
/// on a unit interval; x0 < 0 <= x1.
fn hermite_root(x0: f64, v0: f64, x1: f64, v1: f64) -> f64 {
    let eval = |s: f64| {
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        (
            h00 * x0 + h10 * v0 + h01 * x1 + h11 * v1,
            d00 * x0 + d10 * v0 + d01 * x1 + d11 * v1,
        )
    };
    let mut s = -x0 / (x1 - x0);
    for _ in 0..20 {
        let (f, df) = eval(s);
        if df == 0.0 {
            break;
        }
        let next = (s - f / df).clamp(0.0, 1.0);
        if (next - s).abs() < 1e-15 {
            s = next;
            break;
        }
        s = next;
    }
    s
}

/// Times of upward zero crossings of the atom's displacement from equilibrium,
/// from cubic Hermite interpolation between accepted steps.
pub fn atom_crossings(
    sys: &ClassicalSystem,
    initial: &ClassicalState,
    duration: f64,
    opts: &ClassicalOptions,
) -> Result<(Vec<f64>, RunSummary)> {
    let z0 = sys.equilibrium.0;
    let m = sys.atom_mass;
    let mut prev: Option<(f64, f64, f64)> = None;
    let mut out = Vec::new();
    let summary = sys.integrate(initial, duration, opts, |s| {
        let x = s.z_a - z0;
        let v = s.p_a / m;
        if let Some((tp, xp, vp)) = prev {
            if xp < 0.0 && x >= 0.0 {
                let h = s.t - tp;
                out.push(tp + h * hermite_root(xp, vp * h, x, v * h));
            }
        }
        prev = Some((s.t, x, v));
        true
    })?;
    Ok((out, summary))
}

/// Mean oscillation period from successive upward crossings.
pub fn mean_period(crossings: &[f64]) -> Option<f64> {
    if crossings.len() < 2 {
        return None;
    }
    Some((crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64)
}

/// Angular frequency 2g of the energy exchange between the two bodies.
///
/// The atom's share of the oscillation energy follows cos^2(g t); the run stops
/// when the share first falls to cos^2(theta) and returns 2 theta / t.
pub fn energy_exchange_frequency(
    sys: &ClassicalSystem,
    initial: &ClassicalState,
    theta: f64,
    max_duration: f64,
    opts: &ClassicalOptions,
) -> Result<Option<f64>> {
    ensure(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2, || {
        "theta must lie in (0, pi/2)".into()
    })?;
    let (ea0, em0) = sys.partial_energies(initial);
    ensure(ea0 > 0.0 && em0 == 0.0, || {
        "start with all oscillation energy in the atom".into()
    })?;
    let level = theta.cos().powi(2);
    let mut prev: Option<(f64, f64)> = None;
    let mut hit: Option<f64> = None;
    let summary = sys.integrate(initial, max_duration, opts, |s| {
        let (ea, em) = sys.partial_energies(s);
        let f = ea / (ea + em) - level;
        if let Some((tp, fp)) = prev {
            if fp > 0.0 && f <= 0.0 {
                hit = Some(tp + (s.t - tp) * fp / (fp - f));
                return false;
            }
        }
        prev = Some((s.t, f));
        true
    })?;
    if summary.escaped {
        return Ok(None);
    }
    Ok(hit.map(|t| 2.0 * theta / (t - initial.t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physcore::{
        hz_to_angular, AtomSpecies, Environment, OscillatorSpec, TrapKind, TrapSpec,
    };
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn pair(coefficient: f64, p: f64, wa0: f64, wm0: f64, m: f64, big: f64, d: f64) -> CoupledPair {
        CoupledPair {
            atom: AtomSpecies::new("toy", m, 0.0).unwrap(),
            n_atoms: 1,
            trap: TrapSpec::new(wa0, 0.0, TrapKind::IonRf).unwrap(),
            oscillator: OscillatorSpec::new(big, wm0, 1e6).unwrap(),
            potential: CouplingPotential::custom_power_law(coefficient, p).unwrap(),
            equilibrium_distance: d,
            environment: Environment::new(0.0).unwrap(),
            atomic_decoherence: 0.0,
            compensation_factor: 1.0,
        }
    }

    #[test]
    fn remainder_series_matches_direct() {
        for &p in &[1.0, 3.0, 4.0] {
            for &u in &[-9e-3, -1e-3, 1e-3, 9e-3] {
                let direct = (1.0f64 + u).powf(-p) - 1.0 + p * u;
                assert_relative_eq!(remainder2(p, u), direct, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn harmonic_period() {
        let w = hz_to_angular(1e3);
        let sys =
            ClassicalSystem::from_pair(&pair(0.0, 1.0, w, 2.0 * w, 1e-25, 1e-20, 1e-6)).unwrap();
        let mut s = sys.at_rest();
        s.z_a -= 1e-9;
        let tol = 1e-9;
        let (c, summary) =
            atom_crossings(&sys, &s, 20.5 * 2.0 * PI / w, &ClassicalOptions::new(tol)).unwrap();
        let period = mean_period(&c).unwrap();
        assert_relative_eq!(period, 2.0 * PI / w, max_relative = tol);
        assert!(
            summary.energy_drift < 10.0 * tol,
            "{}",
            summary.energy_drift
        );
        assert!(!summary.escaped);
    }

    #[test]
    fn escape_onto_surface() {
        // strongly attractive surface and a large kick towards it
        let m = 1.44e-25;
        let w = hz_to_angular(1e3);
        let p = pair(-1e-55, 4.0, w, w, m, 1e-12, 1e-6);
        let sys = ClassicalSystem::from_pair(&p).unwrap();
        let mut s = sys.at_rest();
        s.p_a = m * w * 2e-6;
        let tr = sample_run(&sys, &s, 1e-2, &ClassicalOptions::new(1e-8)).unwrap();
        assert!(tr.summary.escaped);
        assert!(tr.summary.final_state.t < 1e-2);
        let d = tr.summary.final_state.z_m - tr.summary.final_state.z_a;
        assert!(!(10e-9..=100e-6).contains(&d));
    }

    #[test]
    fn at_rest_stays_at_rest() {
        let w = hz_to_angular(1e4);
        let sys =
            ClassicalSystem::from_pair(&pair(2e-28, 1.0, w, w, 1.5e-26, 1e-15, 10e-6)).unwrap();
        let s = sys.at_rest();
        let tr = sample_run(&sys, &s, 1e-3, &ClassicalOptions::new(1e-10)).unwrap();
        let f = tr.summary.final_state;
        assert!((f.z_a - s.z_a).abs() < 1e-18, "{}", f.z_a - s.z_a);
        assert!((f.z_m - s.z_m).abs() < 1e-18);
    }

    #[test]
    fn csv_export() {
        let w = hz_to_angular(1e3);
        let sys = ClassicalSystem::from_pair(&pair(0.0, 1.0, w, w, 1e-25, 1e-20, 1e-6)).unwrap();
        let mut o = ClassicalOptions::new(1e-8);
        o.sample_interval = Some(1e-4);
        let tr = sample_run(&sys, &sys.at_rest(), 1e-3, &o).unwrap();
        let csv = tr.csv();
        assert!(csv.starts_with("t_s,z_a_m,z_m_m,p_a_kgms,p_m_kgms\n"));
        assert!(csv.lines().count() >= 11);
    }

    fn resonant_pair(eps: f64, mass_ratio: f64, w: f64) -> CoupledPair {
        let m = 1.5e-26;
        let big = m / mass_ratio;
        let d: f64 = 10e-6;
        let u2 = eps * m * w * w;
        let coefficient = u2 * d.powi(3) / 2.0;
        pair(
            coefficient,
            1.0,
            (w * w - u2 / m).sqrt(),
            (w * w - u2 / big).sqrt(),
            m,
            big,
            d,
        )
    }

    #[test]
    fn energy_exchange_at_twice_g0() {
        let w = hz_to_angular(1e6);
        let p = resonant_pair(0.01, 1e-6, w);
        let g0 = p.single_phonon_coupling().unwrap();
        let sys = ClassicalSystem::from_pair(&p).unwrap();
        let (lo, hi) = sys.normal_modes();
        let mut s = sys.at_rest();
        s.z_a += 1e-3 * p.equilibrium_distance;
        let max = 1.0 / g0;
        let omega =
            energy_exchange_frequency(&sys, &s, PI / 8.0, max, &ClassicalOptions::new(1e-4))
                .unwrap()
                .unwrap();
        assert_relative_eq!(omega, hi - lo, max_relative = 1e-2);
        assert_relative_eq!(omega, 2.0 * g0, max_relative = 1e-2);
    }

    #[test]
    fn anharmonic_period_matches_expansion() {
        let w = hz_to_angular(1e5);
        let p = resonant_pair(0.3, 1e-6, w);
        let sys = ClassicalSystem::from_pair(&p).unwrap().clamped();
        for &frac in &[0.01, 0.03, 0.05] {
            let a = frac * p.equilibrium_distance;
            let mut s = sys.at_rest();
            s.z_a -= a;
            let (c, summary) =
                atom_crossings(&sys, &s, 10.5 * 2.0 * PI / w, &ClassicalOptions::new(1e-9))
                    .unwrap();
            let omega = 2.0 * PI / mean_period(&c).unwrap();
            let expected = p.anharmonic_frequency(a).unwrap();
            assert_relative_eq!(omega, expected, max_relative = 1e-2);
            assert!(summary.energy_drift < 1e-8);
        }
    }

    #[test]
    fn coupled_nonlinear_energy_drift() {
        let w = hz_to_angular(1e5);
        let p = resonant_pair(0.2, 1e-2, w);
        let sys = ClassicalSystem::from_pair(&p).unwrap();
        let mut s = sys.at_rest();
        s.z_a += 0.05 * p.equilibrium_distance;
        s.p_m = 1e-3 * p.oscillator.effective_mass * w * p.equilibrium_distance;
        for &tol in &[1e-6, 1e-9] {
            let tr = sample_run(&sys, &s, 200.0 / w, &ClassicalOptions::new(tol)).unwrap();
            assert!(
                tr.summary.energy_drift < 10.0 * tol,
                "{tol}: {}",
                tr.summary.energy_drift
            );
        }
    }
}
