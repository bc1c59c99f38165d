//! Swap cooling through a resonant exchange and a dynamical check of the
//! sympathetic-cooling rate.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};
use serde::Serialize;

use super::quantum::{
    default_mech_levels, evolve_quantum, mech_levels_for_thermal, thermal_distribution, AtomSector,
    Basis, Channel, Dissipator, EvolutionSpec, Hamiltonian, QuantumState, QuantumTrajectory,
    CUTOFF_SELECTION_TOL,
};
use crate::error::{ensure, Error, Result};

/// Initial mechanical state for a swap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MechInitial {
    Fock(usize),
    Thermal(f64),
}

/// Rates (rad/s) acting during a swap.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct SwapDissipation {
    /// Mechanical energy damping gamma_m.
    pub gamma_m: f64,
    pub n_th: f64,
    pub atom_decay: f64,
    pub atom_dephase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwapResult {
    pub initial_occupation: f64,
    pub final_occupation: f64,
    /// Fraction of the initial phonons removed, 1 - n_final / n_initial.
    pub transfer_fidelity: f64,
    /// pi / (2 g sqrt(N)), s
    pub duration: f64,
    pub mech_levels: usize,
    pub trajectory: QuantumTrajectory,
}

/// Mean phonon number removed by a lossless single-atom swap of duration
/// pi / (2 g) from a diagonal state with populations `p`: sum p_n sin^2(sqrt(n) pi / 2).
pub fn ideal_swap_reduction(p: &[f64]) -> f64 {
    p.iter()
        .enumerate()
        .map(|(n, pn)| pn * ((n as f64).sqrt() * PI / 2.0).sin().powi(2))
        .sum()
}

/// Atoms start in |g>^N; the exchange runs for pi / (2 g sqrt(N)).
pub fn swap_cool(
    mech: MechInitial,
    g: f64,
    n_atoms: usize,
    dissipation: SwapDissipation,
) -> Result<SwapResult> {
    ensure(g > 0.0 && n_atoms >= 1, || {
        "swap needs g > 0 and N >= 1".into()
    })?;
    let levels = match mech {
        MechInitial::Fock(n) => {
            default_mech_levels(n as f64)
                .max(n + 3)
                .max(mech_levels_for_thermal(
                    dissipation.n_th,
                    CUTOFF_SELECTION_TOL,
                ))
        }
        MechInitial::Thermal(n) => {
            ensure(n >= 0.0, || "thermal occupation must be >= 0".into())?;
            mech_levels_for_thermal(n.max(dissipation.n_th), CUTOFF_SELECTION_TOL)
        }
    };
    let (sector, hamiltonian) = if n_atoms == 1 {
        (
            AtomSector::TwoLevel,
            Hamiltonian::JaynesCummings { g, detuning: 0.0 },
        )
    } else {
        (
            AtomSector::Dicke { n_atoms },
            Hamiltonian::TavisCummings { g, n_atoms },
        )
    };
    let basis = Basis::new(sector, levels)?;
    let state = match mech {
        MechInitial::Fock(n) => QuantumState::fock(basis, 0, n)?,
        MechInitial::Thermal(n) => QuantumState::thermal_mech(basis, 0, n)?,
    };
    let mut dissipators = Vec::new();
    if dissipation.gamma_m > 0.0 {
        dissipators.push(Dissipator::new(
            dissipation.gamma_m,
            Channel::MechDecay {
                n_th: dissipation.n_th,
            },
        ));
    }
    if dissipation.atom_decay > 0.0 {
        dissipators.push(Dissipator::new(dissipation.atom_decay, Channel::AtomDecay));
    }
    if dissipation.atom_dephase > 0.0 {
        dissipators.push(Dissipator::new(
            dissipation.atom_dephase,
            Channel::AtomDephase,
        ));
    }
    let duration = PI / (2.0 * g * (n_atoms as f64).sqrt());
    let spec = EvolutionSpec::with_max_step(hamiltonian, dissipators, duration, 10);
    let trajectory = evolve_quantum(&state, &spec)?;
    let initial_occupation = state.mech_occupation();
    let final_occupation = trajectory.final_state.mech_occupation();
    let transfer_fidelity = if initial_occupation > 0.0 {
        1.0 - final_occupation / initial_occupation
    } else {
        0.0
    };
    Ok(SwapResult {
        initial_occupation,
        final_occupation,
        transfer_fidelity,
        duration,
        mech_levels: levels,
        trajectory,
    })
}

/// Toy-scale two-mode model of the lattice cooling: a damped atomic mode (rate
/// gamma_a^cool) exchanging with the membrane, atom side coupled with g, membrane
/// side with R g. Rates in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToyCooling {
    pub g0: f64,
    pub n_atoms: f64,
    pub reflectivity: f64,
    pub gamma_m: f64,
    pub n_th: f64,
    pub atom_cooling_rate: f64,
    pub initial_occupation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoolingCrosscheck {
    /// gamma_m + 4 R N g0^2 / gamma_a^cool
    pub formula_rate: f64,
    /// Fitted membrane energy decay rate from the moment equations.
    pub moment_rate: f64,
    /// Same from a full master-equation run (symmetric coupling only).
    pub lindblad_rate: Option<f64>,
    /// Rate the comparison uses: master equation when available.
    pub fitted_rate: f64,
    pub relative_error: f64,
    /// Steady-state membrane occupation of the two-mode model.
    pub steady_state: f64,
    /// (gamma_m / Gamma_m) n_th
    pub steady_state_thermal_term: f64,
}

impl ToyCooling {
    pub fn collective_coupling(&self) -> f64 {
        self.g0 * self.n_atoms.sqrt()
    }

    pub fn formula_rate(&self) -> f64 {
        self.gamma_m
            + 4.0 * self.reflectivity * self.n_atoms * self.g0 * self.g0 / self.atom_cooling_rate
    }

    fn validate(&self) -> Result<()> {
        ensure(self.atom_cooling_rate > 0.0, || {
            "atomic cooling rate must be positive".into()
        })?;
        ensure((0.0..=1.0).contains(&self.reflectivity), || {
            "reflectivity must lie in [0, 1]".into()
        })?;
        ensure(
            self.gamma_m > 0.0 && self.n_th >= 0.0 && self.n_atoms >= 0.0 && self.g0 >= 0.0,
            || "need gamma_m > 0 and non-negative n_th, N, g0".into(),
        )?;
        ensure(self.initial_occupation > self.n_th, || {
            "initial occupation must exceed the bath occupation to observe cooling".into()
        })?;
        if self.collective_coupling() >= self.atom_cooling_rate / 4.0 {
            return Err(Error::Regime(format!(
                "g_N = {:e} rad/s is not below gamma_a^cool / 4 = {:e} rad/s; the rate picture needs weak coupling",
                self.collective_coupling(),
                self.atom_cooling_rate / 4.0
            )));
        }
        Ok(())
    }

    /// Linear equations for x = (N_a, N_b, Re C, Im C), C = <a^dag b>: dx/dt = A x + f.
    fn moment_system(&self) -> (Matrix4<f64>, Vector4<f64>) {
        let g = self.collective_coupling();
        let (ga, gb) = (g, self.reflectivity * g);
        let k = self.atom_cooling_rate;
        let gm = self.gamma_m;
        let s = 0.5 * (k + gm);
        #[rustfmt::skip]
        let a = Matrix4::new(
            -k,  0.0, 0.0, 2.0 * ga,
            0.0, -gm, 0.0, -2.0 * gb,
            0.0, 0.0, -s,  0.0,
            -gb, ga,  0.0, -s,
        );
        (a, Vector4::new(0.0, gm * self.n_th, 0.0, 0.0))
    }

    pub fn steady_state(&self) -> Result<f64> {
        let (a, f) = self.moment_system();
        let x = a
            .lu()
            .solve(&(-f))
            .ok_or_else(|| Error::domain("moment equations have no steady state"))?;
        Ok(x[1])
    }

    /// Membrane occupation N_b(t) from the moment equations, RK4.
    pub fn moment_trajectory(&self, duration: f64, samples: usize) -> Vec<(f64, f64)> {
        let (a, f) = self.moment_system();
        let rhs = |x: &Vector4<f64>| a * x + f;
        let h_max = 0.01 / self.atom_cooling_rate.max(self.collective_coupling());
        let per = ((duration / samples as f64) / h_max).ceil().max(1.0) as usize;
        let h = duration / (per * samples) as f64;
        let mut x = Vector4::new(0.0, self.initial_occupation, 0.0, 0.0);
        let mut out = vec![(0.0, x[1])];
        for s in 1..=samples {
            for _ in 0..per {
                let k1 = rhs(&x);
                let k2 = rhs(&(x + k1 * (h / 2.0)));
                let k3 = rhs(&(x + k2 * (h / 2.0)));
                let k4 = rhs(&(x + k3 * h));
                x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            }
            out.push((duration * s as f64 / samples as f64, x[1]));
        }
        out
    }
}

/// Least-squares decay rate of n(t) - n_ss over samples with t >= t_min.
pub fn fit_decay_rate(series: &[(f64, f64)], n_ss: f64, t_min: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, n)| *t >= t_min && *n - n_ss > 0.0)
        .map(|(t, n)| (*t, (n - n_ss).ln()))
        .collect();
    ensure(pts.len() >= 3, || {
        "too few samples above the steady state to fit".into()
    })?;
    let m = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t, b + y));
    let (tm, ym) = (st / m, sy / m);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(n, d), (t, y)| {
        (n + (t - tm) * (y - ym), d + (t - tm).powi(2))
    });
    Ok(-num / den)
}

/// Compares the fitted membrane decay rate of the two-mode model with
/// gamma_m + 4 R N g0^2 / gamma_a^cool.
pub fn sympathetic_cooling_crosscheck(p: &ToyCooling) -> Result<CoolingCrosscheck> {
    p.validate()?;
    let formula = p.formula_rate();
    let n_ss = p.steady_state()?;
    let duration = 2.5 / formula;
    let t_min = 10.0 / p.atom_cooling_rate;
    ensure(t_min < 0.5 * duration, || {
        "atomic damping too slow compared with the cooling time to separate the transient".into()
    })?;
    let moments = p.moment_trajectory(duration, 100);
    let moment_rate = fit_decay_rate(&moments, n_ss, t_min)?;
    let lindblad_rate = if p.reflectivity == 1.0 {
        Some(lindblad_cooling_rate(p, duration, n_ss, t_min)?)
    } else {
        None
    };
    let fitted = lindblad_rate.unwrap_or(moment_rate);
    Ok(CoolingCrosscheck {
        formula_rate: formula,
        moment_rate,
        lindblad_rate,
        fitted_rate: fitted,
        relative_error: (fitted - formula).abs() / formula,
        steady_state: n_ss,
        steady_state_thermal_term: p.gamma_m / formula * p.n_th,
    })
}

fn lindblad_cooling_rate(p: &ToyCooling, duration: f64, n_ss: f64, t_min: f64) -> Result<f64> {
    let g = p.collective_coupling();
    let mech_levels =
        mech_levels_for_thermal(p.initial_occupation.max(p.n_th), CUTOFF_SELECTION_TOL);
    // atomic occupation stays near 4 g^2 / kappa^2 times the membrane's
    let n_atom = 4.0 * (g / p.atom_cooling_rate).powi(2) * p.initial_occupation;
    let atom_levels = (3..)
        .find(|&l| {
            let pops = thermal_distribution(n_atom, l);
            pops[l - 1] + pops[l - 2] < CUTOFF_SELECTION_TOL
        })
        .unwrap_or(3);
    let basis = Basis::new(
        AtomSector::Fock {
            levels: atom_levels,
        },
        mech_levels,
    )?;
    let state = QuantumState::thermal_mech(basis, 0, p.initial_occupation)?;
    let spec = EvolutionSpec::with_max_step(
        Hamiltonian::BeamSplitter { g },
        vec![
            Dissipator::new(p.atom_cooling_rate, Channel::AtomDecay),
            Dissipator::new(p.gamma_m, Channel::MechDecay { n_th: p.n_th }),
        ],
        duration,
        50,
    );
    let tr = evolve_quantum(&state, &spec)?;
    let series: Vec<(f64, f64)> = tr
        .samples
        .iter()
        .map(|s| (s.t, s.diagnostics.mech_occupation))
        .collect();
    fit_decay_rate(&series, n_ss, t_min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toy(n: f64, r: f64) -> ToyCooling {
        ToyCooling {
            g0: 0.1 / n.sqrt(),
            n_atoms: n,
            reflectivity: r,
            gamma_m: 0.01,
            n_th: 0.2,
            atom_cooling_rate: 1.0,
            initial_occupation: 1.0,
        }
    }

    #[test]
    fn perfect_swap_of_one_phonon() {
        let r = swap_cool(
            MechInitial::Fock(1),
            2.0 * PI * 50.0,
            1,
            SwapDissipation::default(),
        )
        .unwrap();
        assert!(r.final_occupation < 1e-6, "{}", r.final_occupation);
        assert!(r.transfer_fidelity > 1.0 - 1e-6);
    }

    #[test]
    fn thermal_swap_matches_exact_reduction() {
        let n0 = 0.3;
        let r = swap_cool(MechInitial::Thermal(n0), 1.0, 1, SwapDissipation::default()).unwrap();
        let p = thermal_distribution(n0, r.mech_levels);
        let s: f64 = p.iter().sum();
        let p: Vec<f64> = p.iter().map(|x| x / s).collect();
        let reduction = r.initial_occupation - r.final_occupation;
        assert_relative_eq!(reduction, ideal_swap_reduction(&p), max_relative = 1e-6);
        assert!(reduction >= p[1]);
    }

    #[test]
    fn collective_swap_of_one_phonon() {
        let r = swap_cool(MechInitial::Fock(1), 1.0, 3, SwapDissipation::default()).unwrap();
        assert!(r.final_occupation < 1e-6);
        assert_relative_eq!(r.duration, PI / (2.0 * 3f64.sqrt()), max_relative = 1e-15);
    }

    #[test]
    fn overdamped_swap_does_not_cool() {
        let g = 1.0;
        let n_th = 2.0;
        let diss = SwapDissipation {
            gamma_m: 50.0 * g / n_th,
            n_th,
            ..Default::default()
        };
        let r = swap_cool(MechInitial::Thermal(n_th), g, 1, diss).unwrap();
        let change = (r.initial_occupation - r.final_occupation).abs() / r.initial_occupation;
        assert!(change < 0.1, "{change}");
    }

    #[test]
    fn moment_model_matches_rate_formula() {
        for &r in &[1.0, 0.3] {
            let p = toy(10.0, r);
            let c = sympathetic_cooling_crosscheck(&ToyCooling {
                reflectivity: r,
                ..p
            })
            .unwrap();
            let err = (c.moment_rate - c.formula_rate).abs() / c.formula_rate;
            assert!(
                err < 0.1,
                "R = {r}: {} vs {}",
                c.moment_rate,
                c.formula_rate
            );
        }
    }

    #[test]
    fn zero_coupling_decays_at_gamma_m() {
        let mut p = toy(1.0, 0.5);
        p.g0 = 0.0;
        let c = sympathetic_cooling_crosscheck(&p).unwrap();
        assert_relative_eq!(c.moment_rate, p.gamma_m, max_relative = 1e-6);
        assert_relative_eq!(c.steady_state, p.n_th, max_relative = 1e-9);
    }

    #[test]
    fn doubling_atoms_doubles_cold_damping() {
        let mut p = toy(10.0, 0.6);
        p.g0 = 0.05 / 10f64.sqrt();
        let c1 = sympathetic_cooling_crosscheck(&p).unwrap();
        p.n_atoms *= 2.0;
        let c2 = sympathetic_cooling_crosscheck(&p).unwrap();
        let ratio = (c2.moment_rate - p.gamma_m) / (c1.moment_rate - p.gamma_m);
        assert!((ratio - 2.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn steady_state_thermal_term() {
        let mut p = toy(10.0, 0.3);
        p.n_th = 50.0;
        p.initial_occupation = 60.0;
        let ss = p.steady_state().unwrap();
        let term = p.gamma_m / p.formula_rate() * p.n_th;
        assert!((ss - term).abs() < 0.1 * term, "{ss} vs {term}");
    }

    #[test]
    fn strong_coupling_refused() {
        let mut p = toy(1.0, 1.0);
        p.g0 = 0.3;
        assert!(matches!(
            sympathetic_cooling_crosscheck(&p),
            Err(Error::Regime(_))
        ));
    }
}
