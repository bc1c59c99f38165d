//! Harmonic atom trap plus a surface potential along one axis: minimum,
//! barrier, trap frequency and epsilon, and the distance / barrier sweeps
//! built on them.
//!
//! Coordinates: the surface sits at `surface_position` (Z_m), the atom above
//! it at `z > Z_m`, gravity (when on) pulls towards the surface. The distance
//! to the surface is `x = z - Z_m`.
//!
//! Every surface kind is a single power law `A x^-p`, so its curvature has one
//! sign. For attraction (`A < 0`) the total curvature changes sign exactly once,
//! at `x_i = (p (p+1) |A| / m omega0^2)^(1/(p+2))`, which makes U' unimodal:
//! the trap exists iff `U'(x_i) < 0`, and then the saddle lies below `x_i`
//! and the minimum above it.

use serde::Serialize;

use crate::coupling::epsilon_from_curvature;
use crate::error::{ensure, Error, Result};
use crate::physcore::{angular_to_hz, AtomSpecies, G_GRAVITY, HBAR};
use crate::potentials::{power_law_derivative, CouplingPotential};

const MAX_BISECTIONS: usize = 400;

/// Harmonic trap + optional surface term + optional gravity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinedPotential1D {
    /// omega_a,0, rad/s
    pub bare_frequency: f64,
    /// Z_a,0, m
    pub bare_minimum: f64,
    pub surface: Option<CouplingPotential>,
    /// Z_m, m
    pub surface_position: f64,
    pub gravity_on: bool,
    pub atom: AtomSpecies,
}

/// Result of [`CombinedPotential1D::analyze`] for a trap that still holds atoms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundTrap {
    /// m
    pub minimum_position: f64,
    /// minimum_position - Z_m, m
    pub distance: f64,
    /// rad/s
    pub effective_frequency: f64,
    /// J; infinite when nothing limits the trap towards the surface
    pub barrier_height: f64,
    pub saddle_position: Option<f64>,
    /// Signed, U_s'' / (m omega_a^2)
    pub epsilon: f64,
    /// floor(U0 / hbar omega_a) + 1; `None` for an unbounded barrier
    pub bound_level_estimate: Option<u64>,
    /// |U'| at the reported minimum, N
    pub residual_force: f64,
}

impl BoundTrap {
    pub fn barrier_in_quanta(&self) -> f64 {
        self.barrier_height / (HBAR * self.effective_frequency)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrapAnalysis {
    /// Z_a,0 - Z_m, m
    pub bare_distance: f64,
    /// rad/s
    pub bare_frequency: f64,
    /// U_s''(bare distance) / (m omega_a0^2): the textbook estimate that ignores
    /// the deformation of the trap
    pub epsilon_unperturbed: f64,
    /// `None` when no local minimum survives
    pub bound: Option<BoundTrap>,
}

impl TrapAnalysis {
    pub fn vanished(&self) -> bool {
        self.bound.is_none()
    }
}

impl CombinedPotential1D {
    pub fn validate(&self) -> Result<()> {
        ensure(self.bare_frequency > 0.0, || {
            "bare trap frequency must be positive".into()
        })?;
        ensure(self.bare_minimum > self.surface_position, || {
            "bare trap minimum must lie above the surface".into()
        })
    }

    fn mass(&self) -> f64 {
        self.atom.mass
    }

    fn k0(&self) -> f64 {
        self.mass() * self.bare_frequency * self.bare_frequency
    }

    fn weight(&self) -> f64 {
        if self.gravity_on {
            self.mass() * G_GRAVITY
        } else {
            0.0
        }
    }

    fn surface_law(&self) -> (f64, f64) {
        self.surface.map(|s| s.power_law()).unwrap_or((0.0, 1.0))
    }

    /// n-th derivative of the surface term alone at distance x (no range check).
    pub fn surface_derivative(&self, order: u32, x: f64) -> f64 {
        let (a, p) = self.surface_law();
        if a == 0.0 {
            0.0
        } else {
            power_law_derivative(a, p, order, x)
        }
    }

    /// U(z), J. Zero of energy at the bare minimum without surface or gravity.
    pub fn value(&self, z: f64) -> f64 {
        let dz = z - self.bare_minimum;
        0.5 * self.k0() * dz * dz
            + self.surface_derivative(0, z - self.surface_position)
            + self.weight() * z
    }

    /// U(z) with the surface displaced to `zm` and the distance to it clamped
    /// from below at `min_distance` (grid evaluation next to a moving surface).
    pub fn value_displaced(&self, z: f64, zm: f64, min_distance: f64) -> f64 {
        let dz = z - self.bare_minimum;
        0.5 * self.k0() * dz * dz
            + self.surface_derivative(0, (z - zm).max(min_distance))
            + self.weight() * z
    }

    /// dU/dz, N.
    pub fn force_derivative(&self, z: f64) -> f64 {
        self.k0() * (z - self.bare_minimum)
            + self.surface_derivative(1, z - self.surface_position)
            + self.weight()
    }

    /// d2U/dz2, J/m^2.
    pub fn curvature(&self, z: f64) -> f64 {
        self.k0() + self.surface_derivative(2, z - self.surface_position)
    }

    /// Bisect U' = 0 on [lo, hi] (distances from the surface); `rising` selects a
    /// minimum (U' goes - to +) or a maximum.
    fn refine_root(&self, mut lo: f64, mut hi: f64, rising: bool) -> Result<f64> {
        let zm = self.surface_position;
        let sign = |x: f64| {
            let f = self.force_derivative(zm + x);
            if rising {
                f > 0.0
            } else {
                f < 0.0
            }
        };
        ensure(!sign(lo) && sign(hi), || "root not bracketed".into())?;
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if sign(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let flo = self.force_derivative(zm + lo).abs();
        let fhi = self.force_derivative(zm + hi).abs();
        Ok(if flo <= fhi { lo } else { hi })
    }

    fn check_range(&self, x: f64, what: &str) -> Result<()> {
        if let Some(s) = &self.surface {
            s.check_distance(x).map_err(|e| match e {
                Error::OutOfRange { .. } => Error::Regime(format!(
                    "{what} at {x:e} m from the surface lies outside the potential's valid range [{:e}, {:e}] m",
                    s.valid_range.0, s.valid_range.1
                )),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn analyze(&self) -> Result<TrapAnalysis> {
        self.validate()?;
        let m = self.mass();
        let k0 = self.k0();
        let zm = self.surface_position;
        let bare_distance = self.bare_minimum - zm;
        let (a, p) = self.surface_law();
        let epsilon_unperturbed = self.surface_derivative(2, bare_distance) / k0;
        let mut out = TrapAnalysis {
            bare_distance,
            bare_frequency: self.bare_frequency,
            epsilon_unperturbed,
            bound: None,
        };

        let (x_min, saddle) = if a < 0.0 {
            let x_i = (p * (p + 1.0) * a.abs() / k0).powf(1.0 / (p + 2.0));
            if self.force_derivative(zm + x_i) >= 0.0 {
                return Ok(out);
            }
            let mut lo = 0.5 * x_i;
            while self.force_derivative(zm + lo) <= 0.0 {
                lo *= 0.5;
            }
            let mut hi = 2.0 * x_i.max(bare_distance);
            while self.force_derivative(zm + hi) <= 0.0 {
                hi *= 2.0;
            }
            let saddle = self.refine_root(lo, x_i, false)?;
            let x_min = self.refine_root(x_i, hi, true)?;
            (x_min, Some(saddle))
        } else {
            // convex everywhere: a single minimum
            let mut lo = 0.5 * bare_distance;
            while self.force_derivative(zm + lo) >= 0.0 {
                lo *= 0.5;
                if lo < 1e-15 {
                    return Ok(out);
                }
            }
            let mut hi = 2.0 * bare_distance;
            while self.force_derivative(zm + hi) <= 0.0 {
                hi *= 2.0;
            }
            (self.refine_root(lo, hi, true)?, None)
        };

        self.check_range(x_min, "trap minimum")?;
        let z_min = zm + x_min;
        let u2 = self.curvature(z_min);
        ensure(u2 > 0.0, || {
            "curvature at the minimum is not positive".into()
        })?;
        let omega = (u2 / m).sqrt();
        let barrier = match saddle {
            Some(xs) => {
                self.check_range(xs, "barrier saddle")?;
                (self.value(zm + xs) - self.value(z_min)).max(0.0)
            }
            None => f64::INFINITY,
        };
        let epsilon =
            epsilon_from_curvature(self.surface_derivative(2, x_min), m, self.bare_frequency)?;
        let bound_level_estimate = barrier
            .is_finite()
            .then(|| (barrier / (HBAR * omega)).floor() as u64 + 1);
        out.bound = Some(BoundTrap {
            minimum_position: z_min,
            distance: x_min,
            effective_frequency: omega,
            barrier_height: barrier,
            saddle_position: saddle.map(|x| zm + x),
            epsilon,
            bound_level_estimate,
            residual_force: self.force_derivative(z_min).abs(),
        });
        Ok(out)
    }
}

/// A family of surface traps indexed by distance, as used for the sweeps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceTrapFamily {
    pub atom: AtomSpecies,
    /// Bare frequency, or with `retune` the effective frequency held fixed, rad/s.
    pub frequency: f64,
    pub surface: CouplingPotential,
    pub gravity_on: bool,
    /// Re-tune the bare trap at every distance so the deformed trap keeps `frequency`
    /// and sits exactly at the requested distance. Without it the grid variable is
    /// the bare distance Z_a,0 - Z_m.
    pub retune: bool,
}

impl SurfaceTrapFamily {
    /// Potential for grid value `d` (surface at 0).
    pub fn potential_at(&self, d: f64) -> Result<CombinedPotential1D> {
        ensure(d > 0.0, || format!("distance must be positive, got {d:e}"))?;
        ensure(self.frequency > 0.0, || {
            "trap frequency must be positive".into()
        })?;
        let m = self.atom.mass;
        let mut pot = CombinedPotential1D {
            bare_frequency: self.frequency,
            bare_minimum: d,
            surface: Some(self.surface),
            surface_position: 0.0,
            gravity_on: self.gravity_on,
            atom: self.atom.clone(),
        };
        if self.retune {
            let k0 = m * self.frequency * self.frequency - pot.surface_derivative(2, d);
            if k0 <= 0.0 {
                return Err(Error::Regime(format!(
                    "cannot re-tune at d = {d:e} m: surface curvature alone exceeds the target"
                )));
            }
            pot.bare_frequency = (k0 / m).sqrt();
            pot.bare_minimum = d + (pot.surface_derivative(1, d) + pot.weight()) / k0;
        }
        Ok(pot)
    }

    pub fn analyze_at(&self, d: f64) -> Result<TrapAnalysis> {
        self.potential_at(d)?.analyze()
    }

    fn barrier_quanta_at(&self, d: f64) -> Result<f64> {
        Ok(match self.analyze_at(d) {
            Ok(TrapAnalysis { bound: Some(b), .. }) => b.barrier_in_quanta(),
            Ok(_) => 0.0,
            Err(Error::Regime(_)) => 0.0,
            Err(e) => return Err(e),
        })
    }

    /// Grid value at which the barrier equals `u0_quanta` hbar omega_a (monotone bisection).
    pub fn distance_for_barrier(&self, u0_quanta: f64) -> Result<f64> {
        ensure(u0_quanta > 0.0, || "target barrier must be positive".into())?;
        let (lo_lim, hi_lim) = self.surface.valid_range;
        let mut hi = 1e-6f64.clamp(lo_lim, hi_lim);
        while self.barrier_quanta_at(hi)? < u0_quanta {
            hi *= 1.5;
            if hi > hi_lim {
                return Err(Error::Regime(format!(
                    "barrier {u0_quanta} hbar omega not reached inside the valid range"
                )));
            }
        }
        let mut lo = hi;
        while self.barrier_quanta_at(lo)? >= u0_quanta {
            lo /= 1.5;
            if lo < lo_lim {
                return Err(Error::Regime(format!(
                    "barrier {u0_quanta} hbar omega exceeded everywhere in the valid range"
                )));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (hi - lo) <= 1e-12 * hi {
                break;
            }
            if self.barrier_quanta_at(mid)? >= u0_quanta {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Smallest bare distance at which the trap still has a minimum (fixed bare trap only).
    pub fn vanishing_distance(&self) -> Result<f64> {
        ensure(!self.retune, || "a re-tuned trap does not vanish".into())?;
        let alive = |d: f64| -> Result<bool> {
            match self.analyze_at(d) {
                Ok(a) => Ok(!a.vanished()),
                Err(Error::Regime(_)) => Ok(false),
                Err(e) => Err(e),
            }
        };
        let (lo_lim, hi_lim) = self.surface.valid_range;
        let mut hi = 1e-6f64.clamp(lo_lim, hi_lim);
        while !alive(hi)? {
            hi *= 2.0;
            if hi > hi_lim {
                return Err(Error::Regime("trap vanishes across the valid range".into()));
            }
        }
        let mut lo = hi;
        while alive(lo)? {
            lo *= 0.5;
            if lo < lo_lim {
                return Err(Error::Regime(
                    "trap survives down to the range limit".into(),
                ));
            }
        }
        while hi - lo > 1e-13 * hi {
            let mid = 0.5 * (lo + hi);
            if alive(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

/// One row of a distance or barrier sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub d_m: Option<f64>,
    #[serde(rename = "U0_over_hbar_omega")]
    pub u0_over_hbar_omega: Option<f64>,
    pub epsilon: Option<f64>,
    pub omega_a_hz: Option<f64>,
    pub vanished: bool,
    pub bare_distance_m: f64,
    pub epsilon_unperturbed: f64,
}

impl SweepRow {
    pub const COLUMNS: [&'static str; 7] = [
        "d_m",
        "U0_over_hbar_omega",
        "epsilon",
        "omega_a_hz",
        "vanished",
        "bare_distance_m",
        "epsilon_unperturbed",
    ];

    pub fn from_analysis(a: &TrapAnalysis) -> SweepRow {
        let b = a.bound.as_ref();
        SweepRow {
            d_m: b.map(|b| b.distance),
            u0_over_hbar_omega: b.map(|b| b.barrier_in_quanta()),
            epsilon: b.map(|b| b.epsilon),
            omega_a_hz: b.map(|b| angular_to_hz(b.effective_frequency)),
            vanished: a.vanished(),
            bare_distance_m: a.bare_distance,
            epsilon_unperturbed: a.epsilon_unperturbed,
        }
    }

    pub fn csv_row(&self) -> String {
        let f = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{:e},{:e}",
            f(self.d_m),
            f(self.u0_over_hbar_omega),
            f(self.epsilon),
            f(self.omega_a_hz),
            self.vanished,
            self.bare_distance_m,
            self.epsilon_unperturbed
        )
    }
}

/// CSV text (header + rows) of a sweep table.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = SweepRow::COLUMNS.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

fn check_monotone(grid: &[f64]) -> Result<()> {
    ensure(!grid.is_empty(), || "empty grid".into())?;
    ensure(grid.windows(2).all(|w| w[1] > w[0]), || {
        "grid must be strictly increasing".into()
    })
}

/// Sweep row at grid value `d`; points past the vanishing edge are flagged rows.
pub fn sweep_row_at(family: &SurfaceTrapFamily, d: f64) -> Result<SweepRow> {
    match family.analyze_at(d) {
        Ok(a) => Ok(SweepRow::from_analysis(&a)),
        Err(Error::Regime(_)) => Ok(SweepRow {
            d_m: None,
            u0_over_hbar_omega: None,
            epsilon: None,
            omega_a_hz: None,
            vanished: true,
            bare_distance_m: d,
            epsilon_unperturbed: f64::NAN,
        }),
        Err(e) => Err(e),
    }
}

/// Analysis at every grid distance.
pub fn epsilon_vs_distance(family: &SurfaceTrapFamily, d_grid: &[f64]) -> Result<Vec<SweepRow>> {
    check_monotone(d_grid)?;
    d_grid.iter().map(|&d| sweep_row_at(family, d)).collect()
}

/// Analysis at the distance giving each requested barrier height (in hbar omega_a).
pub fn epsilon_vs_barrier(family: &SurfaceTrapFamily, u0_grid: &[f64]) -> Result<Vec<SweepRow>> {
    check_monotone(u0_grid)?;
    u0_grid
        .iter()
        .map(|&u0| {
            let d = family.distance_for_barrier(u0)?;
            Ok(SweepRow::from_analysis(&family.analyze_at(d)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physcore::{hz_to_angular, SpeciesTable};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    pub(crate) const C4: f64 = 1.788e-55;

    fn rb() -> AtomSpecies {
        SpeciesTable::builtin().get("Rb87").unwrap()
    }

    fn family(beta: f64, retune: bool) -> SurfaceTrapFamily {
        SurfaceTrapFamily {
            atom: rb(),
            frequency: hz_to_angular(10e3),
            surface: CouplingPotential::casimir_polder(C4, beta).unwrap(),
            gravity_on: false,
            retune,
        }
    }

    fn trap(beta: f64, bare_distance: f64, gravity: bool) -> CombinedPotential1D {
        CombinedPotential1D {
            bare_frequency: hz_to_angular(10e3),
            bare_minimum: 5e-6 + bare_distance,
            surface: (beta > 0.0).then(|| CouplingPotential::casimir_polder(C4, beta).unwrap()),
            surface_position: 5e-6,
            gravity_on: gravity,
            atom: rb(),
        }
    }

    #[test]
    fn surface_off_gives_gravity_sag_only() {
        let t = trap(0.0, 2e-6, true);
        let a = t.analyze().unwrap();
        let b = a.bound.unwrap();
        let sag = G_GRAVITY / t.bare_frequency.powi(2);
        assert_relative_eq!(
            b.minimum_position,
            t.bare_minimum - sag,
            max_relative = 1e-12
        );
        assert_eq!(b.epsilon, 0.0);
        assert!(b.barrier_height.is_infinite());
        assert!(b.bound_level_estimate.is_none());
        assert_relative_eq!(
            b.effective_frequency,
            t.bare_frequency,
            max_relative = 1e-12
        );
    }

    #[test]
    fn minimum_and_curvature_invariants() {
        for (beta, d) in [(1.0, 1.2e-6), (200.0, 2.5e-6), (0.06, 0.5e-6)] {
            let t = trap(beta, d, true);
            let b = t.analyze().unwrap().bound.unwrap();
            assert!(b.residual_force < 1e-30, "{}", b.residual_force);
            let u2 = t.curvature(b.minimum_position);
            assert!(u2 > 0.0);
            assert_relative_eq!(
                b.effective_frequency.powi(2) * t.atom.mass,
                u2,
                max_relative = 1e-8
            );
            assert!(b.barrier_height >= 0.0);
            assert_relative_eq!(
                b.distance,
                b.minimum_position - t.surface_position,
                max_relative = 1e-15
            );
            assert!(b.epsilon < 0.0);
        }
    }

    #[test]
    fn fixed_trap_vanishes_at_six_fifths_and_peaks_near_a_third() {
        // Without gravity the minimum and saddle merge where U' = U'' = 0, i.e. at
        // x = (20 beta C4 / m w0^2)^(1/6) with bare distance 6x/5. The textbook
        // estimate evaluated at that bare distance is (5/6)^6.
        for beta in [1.0, 30.0] {
            let f = family(beta, false);
            let dc = f.vanishing_distance().unwrap();
            let m = f.atom.mass;
            let x = (20.0 * beta * C4 / (m * f.frequency.powi(2))).powf(1.0 / 6.0);
            assert_relative_eq!(dc, 1.2 * x, max_relative = 1e-6);
            let a = f.analyze_at(dc).unwrap();
            assert!(!a.vanished());
            assert_relative_eq!(
                a.epsilon_unperturbed.abs(),
                (5.0f64 / 6.0).powi(6),
                max_relative = 1e-5
            );
            assert!(f.analyze_at(0.999 * dc).unwrap().vanished());
        }
    }

    #[test]
    fn retuned_trap_sits_at_requested_distance() {
        let f = family(200.0, true);
        let a = f.analyze_at(1.5e-6).unwrap();
        let b = a.bound.unwrap();
        assert_relative_eq!(b.distance, 1.5e-6, max_relative = 1e-9);
        assert_relative_eq!(b.effective_frequency, f.frequency, max_relative = 1e-8);
        let m = f.atom.mass;
        let closed = -20.0 * 200.0 * C4 / (m * f.frequency.powi(2) * 1.5e-6f64.powi(6));
        assert_relative_eq!(b.epsilon, closed, max_relative = 1e-8);
    }

    #[test]
    fn barrier_is_offset_invariant() {
        // with gravity on, translating the whole setup adds the constant m g dz
        let t = trap(5.0, 1.5e-6, true);
        let b1 = t.analyze().unwrap().bound.unwrap();
        let mut moved = t.clone();
        moved.surface_position += 37e-6;
        moved.bare_minimum += 37e-6;
        let b2 = moved.analyze().unwrap().bound.unwrap();
        assert_relative_eq!(b1.barrier_height, b2.barrier_height, max_relative = 1e-6);
        assert_relative_eq!(b1.distance, b2.distance, max_relative = 1e-9);
    }

    #[test]
    fn distance_sweep_orderings() {
        let grid: Vec<f64> = (0..40).map(|i| 0.6e-6 + 0.1e-6 * i as f64).collect();
        let weak = epsilon_vs_distance(&family(1.0, true), &grid).unwrap();
        let strong = epsilon_vs_distance(&family(100.0, true), &grid).unwrap();
        let eps = |r: &SweepRow| r.epsilon.unwrap().abs();
        for w in weak.windows(2).filter(|w| !w[0].vanished && !w[1].vanished) {
            assert!(eps(&w[1]) < eps(&w[0]));
        }
        for (a, b) in weak.iter().zip(&strong) {
            assert!(eps(b) > eps(a));
        }
        let far = family(1.0, true).analyze_at(90e-6).unwrap();
        assert!(far.bound.unwrap().epsilon.abs() < 1e-12);
        let text = sweep_csv(&weak);
        assert_eq!(text.lines().count(), grid.len() + 1);
        assert!(text.starts_with("d_m,U0_over_hbar_omega,epsilon,omega_a_hz,vanished"));
    }

    #[test]
    fn fixed_sweep_flags_vanished_rows() {
        let grid = [0.5e-6, 0.7e-6, 0.9e-6, 2e-6];
        let rows = epsilon_vs_distance(&family(1.0, false), &grid).unwrap();
        assert!(rows[0].vanished && rows[0].epsilon.is_none());
        assert!(!rows[3].vanished);
        assert!(epsilon_vs_distance(&family(1.0, false), &[]).is_err());
        assert!(epsilon_vs_distance(&family(1.0, false), &[2e-6, 1e-6]).is_err());
    }

    #[test]
    fn barrier_sweep() {
        let strong = family(200.0, true);
        let weak = family(1.0, true);
        let rows = epsilon_vs_barrier(&strong, &[2.0, 8.0, 10.0, 40.0]).unwrap();
        for (r, u) in rows.iter().zip([2.0, 8.0, 10.0, 40.0]) {
            assert_relative_eq!(r.u0_over_hbar_omega.unwrap(), u, max_relative = 1e-6);
        }
        let e = |r: &SweepRow| r.epsilon.unwrap().abs();
        assert!(e(&rows[0]) > e(&rows[1]) && e(&rows[1]) > e(&rows[3]));
        assert!((0.10..=0.20).contains(&e(&rows[1])), "{}", e(&rows[1]));
        let w10 = epsilon_vs_barrier(&weak, &[10.0]).unwrap();
        assert!(e(&rows[2]) > e(&w10[0]));
        assert!(e(&rows[2]) > 0.1, "deep trap with strong surface potential");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn retuned_analysis_closes(beta in 0.5f64..300.0, d in 0.8e-6f64..4e-6) {
            let f = family(beta, true);
            let a = f.analyze_at(d).unwrap();
            let b = a.bound.unwrap();
            prop_assert!((b.distance - d).abs() < 1e-9 * d);
            prop_assert!(b.residual_force < 1e-30);
        }
    }
}
