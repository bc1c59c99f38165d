//! Lindblad evolution of an atomic system and one mechanical mode in a truncated Fock space.
//!
//! Frame: interaction picture at the mechanical frequency, rotating-wave Hamiltonians,
//! hbar = 1 (all Hamiltonian parameters and rates in rad/s).

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{ensure, Error, Result};

pub type CMatrix = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Trace tolerance of a valid density matrix.
pub const TRACE_TOL: f64 = 1e-8;
/// Most negative eigenvalue tolerated.
pub const POSITIVITY_TOL: f64 = 1e-8;
/// Largest population allowed in the top two levels of a truncated mode.
pub const CUTOFF_POPULATION_TOL: f64 = 1e-6;
/// Stricter bound used when choosing a cutoff for an initial state.
pub const CUTOFF_SELECTION_TOL: f64 = 1e-7;
/// Step bound: step <= STEP_FACTOR / (largest rate or frequency).
pub const STEP_FACTOR: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomSector {
    TwoLevel,
    /// Bosonic atomic mode with this many Fock levels.
    Fock {
        levels: usize,
    },
    /// Symmetric (Dicke) states of N two-level atoms, k = 0..=N excitations.
    Dicke {
        n_atoms: usize,
    },
}

impl AtomSector {
    pub fn dim(&self) -> usize {
        match *self {
            AtomSector::TwoLevel => 2,
            AtomSector::Fock { levels } => levels,
            AtomSector::Dicke { n_atoms } => n_atoms + 1,
        }
    }

    /// Lowering operator: sigma-, a, or J-.
    fn lowering(&self) -> CMatrix {
        let n = self.dim();
        let mut m = CMatrix::zeros(n, n);
        for k in 1..n {
            let v = match *self {
                AtomSector::TwoLevel => 1.0,
                AtomSector::Fock { .. } => (k as f64).sqrt(),
                AtomSector::Dicke { n_atoms } => ((k * (n_atoms + 1 - k)) as f64).sqrt(),
            };
            m[(k - 1, k)] = Complex64::new(v, 0.0);
        }
        m
    }

    /// Excitation number: sigma+ sigma-, a^dag a, or J_z + N/2.
    fn number(&self) -> CMatrix {
        let n = self.dim();
        CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(i as f64, 0.0)
            } else {
                ZERO
            }
        })
    }

    fn truncated(&self) -> bool {
        matches!(self, AtomSector::Fock { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Basis {
    pub atom: AtomSector,
    /// Number of mechanical Fock levels (cutoff + 1).
    pub mech_levels: usize,
}

impl Basis {
    pub fn new(atom: AtomSector, mech_levels: usize) -> Result<Self> {
        ensure(atom.dim() >= 2 && mech_levels >= 3, || {
            "need at least 2 atomic and 3 mechanical levels".into()
        })?;
        Ok(Basis { atom, mech_levels })
    }

    pub fn dim(&self) -> usize {
        self.atom.dim() * self.mech_levels
    }

    pub fn index(&self, atom: usize, mech: usize) -> usize {
        atom * self.mech_levels + mech
    }

    fn kron_atom(&self, op: &CMatrix) -> CMatrix {
        op.kronecker(&CMatrix::identity(self.mech_levels, self.mech_levels))
    }

    fn kron_mech(&self, op: &CMatrix) -> CMatrix {
        CMatrix::identity(self.atom.dim(), self.atom.dim()).kronecker(op)
    }

    fn mech_lowering(&self) -> CMatrix {
        let n = self.mech_levels;
        let mut m = CMatrix::zeros(n, n);
        for k in 1..n {
            m[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
        }
        m
    }

    pub fn a(&self) -> CMatrix {
        self.kron_atom(&self.atom.lowering())
    }

    pub fn b(&self) -> CMatrix {
        self.kron_mech(&self.mech_lowering())
    }

    pub fn atom_number(&self) -> CMatrix {
        self.kron_atom(&self.atom.number())
    }

    pub fn mech_number(&self) -> CMatrix {
        let b = self.b();
        b.adjoint() * b
    }
}

/// Default mechanical level count for a target occupation: max(20, 8 (n + 1)).
pub fn default_mech_levels(n_target: f64) -> usize {
    (8.0 * (n_target.max(0.0) + 1.0)).ceil().max(20.0) as usize
}

/// Thermal occupation probabilities p_k for k < levels.
pub fn thermal_distribution(n_bar: f64, levels: usize) -> Vec<f64> {
    if n_bar <= 0.0 {
        let mut v = vec![0.0; levels];
        v[0] = 1.0;
        return v;
    }
    let r = n_bar / (n_bar + 1.0);
    (0..levels)
        .map(|k| r.powi(k as i32) / (n_bar + 1.0))
        .collect()
}

/// Levels needed so a thermal state leaves < `tol` in its top two levels,
/// starting from `default_mech_levels`.
pub fn mech_levels_for_thermal(n_bar: f64, tol: f64) -> usize {
    let mut levels = default_mech_levels(n_bar);
    if n_bar <= 0.0 {
        return levels;
    }
    let r = n_bar / (n_bar + 1.0);
    // tail population from level L-2 up, renormalised over the kept levels
    while r.powi(levels as i32 - 2) * (1.0 - r * r) / (1.0 - r.powi(levels as i32)) >= tol {
        levels += 1;
    }
    levels
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    pub basis: Basis,
    pub rho: CMatrix,
}

/// Populations and invariant diagnostics of a density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateDiagnostics {
    pub trace: f64,
    pub purity: f64,
    pub min_eigenvalue: f64,
    pub hermiticity_error: f64,
    pub atom_excitation: f64,
    pub mech_occupation: f64,
    pub mech_top_population: f64,
    pub atom_top_population: Option<f64>,
}

impl QuantumState {
    /// Product state of an atomic basis state (excitation index) and a mechanical
    /// diagonal state with the given populations.
    pub fn product_diagonal(
        basis: Basis,
        atom_level: usize,
        mech_populations: &[f64],
    ) -> Result<Self> {
        ensure(atom_level < basis.atom.dim(), || {
            "atomic level outside the sector".into()
        })?;
        ensure(mech_populations.len() <= basis.mech_levels, || {
            "more mechanical populations than levels".into()
        })?;
        let total: f64 = mech_populations.iter().sum();
        ensure(
            total > 0.0 && mech_populations.iter().all(|p| *p >= 0.0),
            || "populations must be non-negative with a positive sum".into(),
        )?;
        let mut rho = CMatrix::zeros(basis.dim(), basis.dim());
        for (k, p) in mech_populations.iter().enumerate() {
            let i = basis.index(atom_level, k);
            rho[(i, i)] = Complex64::new(p / total, 0.0);
        }
        Ok(QuantumState { basis, rho })
    }

    pub fn fock(basis: Basis, atom_level: usize, mech_level: usize) -> Result<Self> {
        let mut pops = vec![0.0; mech_level + 1];
        pops[mech_level] = 1.0;
        Self::product_diagonal(basis, atom_level, &pops)
    }

    pub fn thermal_mech(basis: Basis, atom_level: usize, n_bar: f64) -> Result<Self> {
        Self::product_diagonal(
            basis,
            atom_level,
            &thermal_distribution(n_bar, basis.mech_levels),
        )
    }

    pub fn expectation(&self, op: &CMatrix) -> Complex64 {
        (op * &self.rho).trace()
    }

    fn mech_level_population(&self, k: usize) -> f64 {
        (0..self.basis.atom.dim())
            .map(|a| self.rho[(self.basis.index(a, k), self.basis.index(a, k))].re)
            .sum()
    }

    fn atom_level_population(&self, a: usize) -> f64 {
        (0..self.basis.mech_levels)
            .map(|k| self.rho[(self.basis.index(a, k), self.basis.index(a, k))].re)
            .sum()
    }

    pub fn mech_populations(&self) -> Vec<f64> {
        (0..self.basis.mech_levels)
            .map(|k| self.mech_level_population(k))
            .collect()
    }

    pub fn atom_populations(&self) -> Vec<f64> {
        (0..self.basis.atom.dim())
            .map(|a| self.atom_level_population(a))
            .collect()
    }

    pub fn mech_occupation(&self) -> f64 {
        self.mech_populations()
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }

    pub fn atom_excitation(&self) -> f64 {
        self.atom_populations()
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.rho + self.rho.adjoint()) * Complex64::new(0.5, 0.0);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn diagnostics(&self) -> StateDiagnostics {
        let n = self.basis.mech_levels;
        let top = self.mech_level_population(n - 1) + self.mech_level_population(n - 2);
        let atom_top = if self.basis.atom.truncated() {
            let d = self.basis.atom.dim();
            Some(self.atom_level_population(d - 1) + self.atom_level_population(d - 2))
        } else {
            None
        };
        let herm = (&self.rho - self.rho.adjoint()).camax();
        StateDiagnostics {
            trace: self.rho.trace().re,
            purity: (&self.rho * &self.rho).trace().re,
            min_eigenvalue: self.eigenvalues()[0],
            hermiticity_error: herm,
            atom_excitation: self.atom_excitation(),
            mech_occupation: self.mech_occupation(),
            mech_top_population: top,
            atom_top_population: atom_top,
        }
    }

    /// Trace, Hermiticity, positivity and cutoff adequacy.
    pub fn check_invariants(&self) -> Result<StateDiagnostics> {
        let d = self.diagnostics();
        if (d.trace - 1.0).abs() > TRACE_TOL {
            return Err(Error::Regime(format!("trace drifted to {}", d.trace)));
        }
        if d.hermiticity_error > TRACE_TOL {
            return Err(Error::Regime(format!(
                "density matrix not Hermitian (max deviation {:e})",
                d.hermiticity_error
            )));
        }
        if d.min_eigenvalue < -POSITIVITY_TOL {
            return Err(Error::Regime(format!(
                "density matrix lost positivity (eigenvalue {:e})",
                d.min_eigenvalue
            )));
        }
        if d.mech_top_population >= CUTOFF_POPULATION_TOL {
            return Err(Error::CutoffInadequate {
                cutoff: self.basis.mech_levels,
                population: d.mech_top_population,
                required: required_levels(self.basis.mech_levels, d.mech_occupation),
            });
        }
        if let Some(p) = d.atom_top_population {
            if p >= CUTOFF_POPULATION_TOL {
                return Err(Error::CutoffInadequate {
                    cutoff: self.basis.atom.dim(),
                    population: p,
                    required: required_levels(self.basis.atom.dim(), d.atom_excitation),
                });
            }
        }
        Ok(d)
    }
}

fn required_levels(current: usize, occupation: f64) -> usize {
    (2 * current).max(mech_levels_for_thermal(occupation, CUTOFF_SELECTION_TOL))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Hamiltonian {
    /// g (a^dag b + a b^dag) between two bosonic modes.
    BeamSplitter { g: f64 },
    /// detuning sigma+ sigma- + g (sigma+ b + sigma- b^dag).
    JaynesCummings { g: f64, detuning: f64 },
    /// g (J+ b + J- b^dag) in the symmetric sector of N atoms.
    TavisCummings { g: f64, n_atoms: usize },
}

impl Hamiltonian {
    fn fastest(&self) -> f64 {
        match *self {
            Hamiltonian::BeamSplitter { g } => g.abs(),
            Hamiltonian::JaynesCummings { g, detuning } => g.abs().max(detuning.abs()),
            Hamiltonian::TavisCummings { g, n_atoms } => g.abs() * (n_atoms as f64).sqrt(),
        }
    }

    /// The atomic sector this Hamiltonian acts on (Fock sectors need a level count).
    pub fn sector(&self, atom_levels: usize) -> AtomSector {
        match *self {
            Hamiltonian::BeamSplitter { .. } => AtomSector::Fock {
                levels: atom_levels,
            },
            Hamiltonian::JaynesCummings { .. } => AtomSector::TwoLevel,
            Hamiltonian::TavisCummings { n_atoms, .. } => AtomSector::Dicke { n_atoms },
        }
    }

    fn check_basis(&self, basis: &Basis) -> Result<()> {
        let ok = match (*self, basis.atom) {
            (Hamiltonian::BeamSplitter { .. }, AtomSector::Fock { .. }) => true,
            (Hamiltonian::JaynesCummings { .. }, AtomSector::TwoLevel) => true,
            (Hamiltonian::JaynesCummings { .. }, AtomSector::Dicke { n_atoms: 1 }) => true,
            (Hamiltonian::TavisCummings { n_atoms, .. }, AtomSector::Dicke { n_atoms: n }) => {
                n == n_atoms
            }
            _ => false,
        };
        ensure(ok, || {
            format!("{self:?} does not act on atomic sector {:?}", basis.atom)
        })
    }

    fn matrix(&self, basis: &Basis) -> CMatrix {
        let a = basis.a();
        let b = basis.b();
        let (g, detuning) = match *self {
            Hamiltonian::BeamSplitter { g } => (g, 0.0),
            Hamiltonian::JaynesCummings { g, detuning } => (g, detuning),
            Hamiltonian::TavisCummings { g, .. } => (g, 0.0),
        };
        let exchange = a.adjoint() * &b;
        let mut h = (&exchange + exchange.adjoint()) * Complex64::new(g, 0.0);
        if detuning != 0.0 {
            h += basis.atom_number() * Complex64::new(detuning, 0.0);
        }
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Channel {
    /// Mechanical damping towards a bath with occupation n_th:
    /// downward rate gamma (n_th + 1), upward rate gamma n_th.
    MechDecay { n_th: f64 },
    /// Pure dephasing; coherences between adjacent atomic levels decay at the given rate.
    AtomDephase,
    /// Atomic decay (sigma-, a or J-) at the given rate.
    AtomDecay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dissipator {
    /// rad/s
    pub rate: f64,
    pub channel: Channel,
}

impl Dissipator {
    pub fn new(rate: f64, channel: Channel) -> Self {
        Dissipator { rate, channel }
    }

    fn fastest(&self) -> f64 {
        match self.channel {
            Channel::MechDecay { n_th } => self.rate * (n_th + 1.0),
            _ => self.rate,
        }
    }

    fn jump_operators(&self, basis: &Basis) -> Vec<CMatrix> {
        let r = |x: f64| Complex64::new(x.sqrt(), 0.0);
        match self.channel {
            Channel::MechDecay { n_th } => {
                let b = basis.b();
                let mut v = vec![&b * r(self.rate * (n_th + 1.0))];
                if n_th > 0.0 {
                    v.push(b.adjoint() * r(self.rate * n_th));
                }
                v
            }
            Channel::AtomDephase => vec![basis.atom_number() * r(2.0 * self.rate)],
            Channel::AtomDecay => vec![basis.a() * r(self.rate)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionSpec {
    pub hamiltonian: Hamiltonian,
    pub dissipators: Vec<Dissipator>,
    /// s
    pub duration: f64,
    /// s
    pub step: f64,
    /// Number of stored intervals (samples = this + 1).
    pub samples: usize,
}

impl EvolutionSpec {
    pub fn fastest_rate(&self) -> f64 {
        self.dissipators
            .iter()
            .map(Dissipator::fastest)
            .fold(self.hamiltonian.fastest(), f64::max)
    }

    pub fn step_bound(&self) -> f64 {
        STEP_FACTOR / self.fastest_rate()
    }

    /// Spec whose step is the largest allowed by the bound.
    pub fn with_max_step(
        hamiltonian: Hamiltonian,
        dissipators: Vec<Dissipator>,
        duration: f64,
        samples: usize,
    ) -> Self {
        let mut s = EvolutionSpec {
            hamiltonian,
            dissipators,
            duration,
            step: 0.0,
            samples,
        };
        s.step = s.step_bound();
        s
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.duration >= 0.0 && self.duration.is_finite(), || {
            "duration must be finite and >= 0".into()
        })?;
        ensure(self.step > 0.0, || "step must be positive".into())?;
        ensure(self.samples >= 1, || {
            "need at least one stored interval".into()
        })?;
        ensure(self.dissipators.iter().all(|d| d.rate >= 0.0), || {
            "dissipation rates must be >= 0".into()
        })?;
        for d in &self.dissipators {
            if let Channel::MechDecay { n_th } = d.channel {
                ensure(n_th >= 0.0, || "bath occupation must be >= 0".into())?;
            }
        }
        let bound = self.step_bound();
        if self.step > bound * (1.0 + 1e-12) {
            return Err(Error::StepBound {
                step: self.step,
                bound,
            });
        }
        Ok(())
    }
}

/// Sparse operator stored as (row, column, value) triplets.
#[derive(Debug, Clone)]
struct Sparse {
    entries: Vec<(usize, usize, Complex64)>,
}

impl Sparse {
    fn from_dense(m: &CMatrix) -> Self {
        let mut entries = Vec::new();
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v != ZERO {
                    entries.push((i, j, v));
                }
            }
        }
        Sparse { entries }
    }
}

/// Precomputed Lindblad generator: d rho/dt = -i (H_eff rho - rho H_eff^dag) + sum L rho L^dag.
struct Generator {
    dim: usize,
    h_eff: Sparse,
    jumps: Vec<Sparse>,
}

impl Generator {
    fn new(spec: &EvolutionSpec, basis: &Basis) -> Self {
        let mut h = spec.hamiltonian.matrix(basis);
        let mut jumps = Vec::new();
        for d in &spec.dissipators {
            for l in d.jump_operators(basis) {
                h -= (l.adjoint() * &l) * Complex64::new(0.0, 0.5);
                jumps.push(Sparse::from_dense(&l));
            }
        }
        Generator {
            dim: basis.dim(),
            h_eff: Sparse::from_dense(&h),
            jumps,
        }
    }

    fn apply(&self, rho: &CMatrix, out: &mut CMatrix) {
        let n = self.dim;
        let src = rho.as_slice();
        // X = -i H_eff rho
        let mut x = vec![ZERO; n * n];
        for &(r, c, v) in &self.h_eff.entries {
            let w = Complex64::new(v.im, -v.re);
            for j in 0..n {
                x[r + j * n] += w * src[c + j * n];
            }
        }
        let dst = out.as_mut_slice();
        for j in 0..n {
            for i in 0..n {
                dst[i + j * n] = x[i + j * n] + x[j + i * n].conj();
            }
        }
        for l in &self.jumps {
            for &(r, c, v) in &l.entries {
                for &(s, c2, v2) in &l.entries {
                    dst[r + s * n] += v * v2.conj() * src[c + c2 * n];
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantumSample {
    pub t: f64,
    pub diagnostics: StateDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantumTrajectory {
    pub samples: Vec<QuantumSample>,
    #[serde(skip)]
    pub final_state: QuantumState,
    pub steps: usize,
    pub step: f64,
}

impl QuantumTrajectory {
    pub const COLUMNS: [&'static str; 6] = [
        "t_s",
        "atom_excitation",
        "mech_occupation",
        "trace",
        "purity",
        "min_eigenvalue",
    ];

    pub fn csv(&self) -> String {
        let mut out = Self::COLUMNS.join(",");
        out.push('\n');
        for s in &self.samples {
            let d = &s.diagnostics;
            let _ = writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{:e}",
                s.t, d.atom_excitation, d.mech_occupation, d.trace, d.purity, d.min_eigenvalue
            );
        }
        out
    }

    pub fn excitation_numbers(&self) -> Vec<f64> {
        self.samples
            .iter()
            .map(|s| s.diagnostics.atom_excitation + s.diagnostics.mech_occupation)
            .collect()
    }
}

/// y += a x
fn axpy(y: &mut CMatrix, a: Complex64, x: &CMatrix) {
    for (yi, xi) in y.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *yi += a * xi;
    }
}

/// Fixed-step RK4 integration of the master equation. Invariants are checked at
/// every stored sample; a cutoff violation aborts the run.
pub fn evolve_quantum(state: &QuantumState, spec: &EvolutionSpec) -> Result<QuantumTrajectory> {
    spec.validate()?;
    spec.hamiltonian.check_basis(&state.basis)?;
    let first = state.check_invariants()?;
    let gen = Generator::new(spec, &state.basis);
    let n = state.basis.dim();
    // whole number of steps per stored interval, no longer than the requested step
    let per_sample = ((spec.duration / spec.samples as f64) / spec.step)
        .ceil()
        .max(1.0) as usize;
    let total = per_sample * spec.samples;
    let h = spec.duration / total as f64;
    let mut rho = state.rho.clone();
    let mut k = [
        CMatrix::zeros(n, n),
        CMatrix::zeros(n, n),
        CMatrix::zeros(n, n),
        CMatrix::zeros(n, n),
    ];
    let mut tmp = CMatrix::zeros(n, n);
    let mut samples = vec![QuantumSample {
        t: 0.0,
        diagnostics: first,
    }];
    let half = Complex64::new(h / 2.0, 0.0);
    let full = Complex64::new(h, 0.0);
    let sixth = Complex64::new(h / 6.0, 0.0);
    let two = Complex64::new(2.0, 0.0);
    for s in 1..=spec.samples {
        for _ in 0..per_sample {
            gen.apply(&rho, &mut k[0]);
            tmp.copy_from(&rho);
            axpy(&mut tmp, half, &k[0]);
            gen.apply(&tmp, &mut k[1]);
            tmp.copy_from(&rho);
            axpy(&mut tmp, half, &k[1]);
            gen.apply(&tmp, &mut k[2]);
            tmp.copy_from(&rho);
            axpy(&mut tmp, full, &k[2]);
            gen.apply(&tmp, &mut k[3]);
            tmp.copy_from(&k[0]);
            axpy(&mut tmp, two, &k[1]);
            axpy(&mut tmp, two, &k[2]);
            tmp += &k[3];
            axpy(&mut rho, sixth, &tmp);
        }
        let st = QuantumState {
            basis: state.basis,
            rho: rho.clone(),
        };
        let d = st.check_invariants()?;
        samples.push(QuantumSample {
            t: spec.duration * s as f64 / spec.samples as f64,
            diagnostics: d,
        });
    }
    Ok(QuantumTrajectory {
        samples,
        final_state: QuantumState {
            basis: state.basis,
            rho,
        },
        steps: total,
        step: h,
    })
}

/// Fidelity <psi| rho |psi> with a basis state.
pub fn basis_state_fidelity(state: &QuantumState, atom_level: usize, mech_level: usize) -> f64 {
    let i = state.basis.index(atom_level, mech_level);
    state.rho[(i, i)].re
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn jc_swap() {
        let g = 2.0 * PI * 100.0;
        let basis = Basis::new(AtomSector::TwoLevel, 20).unwrap();
        let psi = QuantumState::fock(basis, 1, 0).unwrap();
        let spec = EvolutionSpec::with_max_step(
            Hamiltonian::JaynesCummings { g, detuning: 0.0 },
            vec![],
            PI / (2.0 * g),
            10,
        );
        let tr = evolve_quantum(&psi, &spec).unwrap();
        let f = basis_state_fidelity(&tr.final_state, 0, 1);
        assert!(f > 1.0 - 1e-6, "{f}");
        for s in &tr.samples {
            assert!((s.diagnostics.purity - 1.0).abs() < 1e-8);
        }
        for e in tr.excitation_numbers() {
            assert!((e - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn unitary_eigenvalues_constant() {
        let g = 1.0;
        let basis = Basis::new(AtomSector::TwoLevel, 24).unwrap();
        let psi = QuantumState::thermal_mech(basis, 1, 0.7).unwrap();
        let before = psi.eigenvalues();
        let spec = EvolutionSpec::with_max_step(
            Hamiltonian::JaynesCummings { g, detuning: 0.3 },
            vec![],
            3.0,
            3,
        );
        let tr = evolve_quantum(&psi, &spec).unwrap();
        let after = tr.final_state.eigenvalues();
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-8, "{a} {b}");
        }
        let n0 = tr.excitation_numbers()[0];
        for e in tr.excitation_numbers() {
            assert!((e - n0).abs() < 1e-8);
        }
    }

    #[test]
    fn tavis_cummings_frequency_matches_diagonalization() {
        let g = 1.0;
        for n in 1..=4usize {
            // oracle: single-excitation block of N distinguishable atoms plus the mode
            let dim = n + 1;
            let h = nalgebra::DMatrix::<f64>::from_fn(dim, dim, |i, j| {
                if (i == 0) != (j == 0) {
                    g
                } else {
                    0.0
                }
            });
            let ev = h.symmetric_eigenvalues();
            let max = ev.iter().copied().fold(f64::MIN, f64::max);
            let min = ev.iter().copied().fold(f64::MAX, f64::min);
            let omega_oracle = (max - min) / 2.0;

            let basis = Basis::new(AtomSector::Dicke { n_atoms: n }, 20).unwrap();
            let psi = QuantumState::fock(basis, 0, 1).unwrap();
            let t = 0.6 / omega_oracle;
            let spec = EvolutionSpec::with_max_step(
                Hamiltonian::TavisCummings { g, n_atoms: n },
                vec![],
                t,
                1,
            );
            let tr = evolve_quantum(&psi, &spec).unwrap();
            let nb = tr.final_state.mech_occupation();
            let omega = nb.sqrt().acos() / t;
            assert_relative_eq!(omega, omega_oracle, max_relative = 1e-6);
            assert_relative_eq!(omega, (n as f64).sqrt() * g, max_relative = 1e-6);
        }
    }

    #[test]
    fn thermalization_closed_form() {
        let gamma = 1.0;
        let n_th = 0.8;
        let n0 = 3.0;
        let levels = mech_levels_for_thermal(n0, CUTOFF_SELECTION_TOL);
        let basis = Basis::new(AtomSector::Fock { levels: 3 }, levels).unwrap();
        let psi = QuantumState::fock(basis, 0, 3).unwrap();
        let spec = EvolutionSpec::with_max_step(
            Hamiltonian::BeamSplitter { g: 0.0 },
            vec![Dissipator::new(gamma, Channel::MechDecay { n_th })],
            2.0,
            8,
        );
        let tr = evolve_quantum(&psi, &spec).unwrap();
        for s in &tr.samples {
            let exact = n_th + (n0 - n_th) * (-gamma * s.t).exp();
            assert_relative_eq!(s.diagnostics.mech_occupation, exact, max_relative = 1e-4);
            assert!((s.diagnostics.trace - 1.0).abs() < 1e-8);
            assert!(s.diagnostics.min_eigenvalue > -1e-8);
        }
    }

    #[test]
    fn dephasing_and_decay() {
        let basis = Basis::new(AtomSector::TwoLevel, 3).unwrap();
        let mut psi = QuantumState::fock(basis, 0, 0).unwrap();
        // (|g> + |e>)/sqrt2 with the mode in vacuum
        let (g0, e0) = (basis.index(0, 0), basis.index(1, 0));
        for &(i, j) in &[(g0, g0), (g0, e0), (e0, g0), (e0, e0)] {
            psi.rho[(i, j)] = Complex64::new(0.5, 0.0);
        }
        let spec = EvolutionSpec::with_max_step(
            Hamiltonian::JaynesCummings {
                g: 0.0,
                detuning: 0.0,
            },
            vec![Dissipator::new(1.0, Channel::AtomDephase)],
            1.0,
            1,
        );
        let tr = evolve_quantum(&psi, &spec).unwrap();
        assert_relative_eq!(
            tr.final_state.rho[(g0, e0)].re,
            0.5 * (-1.0f64).exp(),
            max_relative = 1e-8
        );
        let spec = EvolutionSpec::with_max_step(
            Hamiltonian::JaynesCummings {
                g: 0.0,
                detuning: 0.0,
            },
            vec![Dissipator::new(1.0, Channel::AtomDecay)],
            1.0,
            1,
        );
        let tr = evolve_quantum(&psi, &spec).unwrap();
        assert_relative_eq!(
            tr.final_state.atom_excitation(),
            0.5 * (-1.0f64).exp(),
            max_relative = 1e-8
        );
    }

    #[test]
    fn cutoff_violation_aborts() {
        let basis = Basis::new(AtomSector::TwoLevel, 6).unwrap();
        let psi = QuantumState::fock(basis, 0, 0).unwrap();
        let spec = EvolutionSpec::with_max_step(
            Hamiltonian::JaynesCummings {
                g: 0.0,
                detuning: 0.0,
            },
            vec![Dissipator::new(1.0, Channel::MechDecay { n_th: 5.0 })],
            5.0,
            5,
        );
        match evolve_quantum(&psi, &spec) {
            Err(Error::CutoffInadequate {
                cutoff, required, ..
            }) => {
                assert_eq!(cutoff, 6);
                assert!(required > 6);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn step_bound_enforced() {
        let basis = Basis::new(AtomSector::TwoLevel, 4).unwrap();
        let psi = QuantumState::fock(basis, 1, 0).unwrap();
        let spec = EvolutionSpec {
            hamiltonian: Hamiltonian::JaynesCummings {
                g: 1.0,
                detuning: 0.0,
            },
            dissipators: vec![],
            duration: 1.0,
            step: 0.02,
            samples: 1,
        };
        assert!(matches!(
            evolve_quantum(&psi, &spec),
            Err(Error::StepBound { .. })
        ));
        let mut tc = spec.clone();
        tc.step = 0.01;
        tc.hamiltonian = Hamiltonian::TavisCummings { g: 1.0, n_atoms: 3 };
        assert!(evolve_quantum(&psi, &tc).is_err(), "sector mismatch");
    }

    #[test]
    fn deterministic() {
        let basis = Basis::new(AtomSector::Dicke { n_atoms: 2 }, 20).unwrap();
        let psi = QuantumState::thermal_mech(basis, 0, 0.3).unwrap();
        let spec = EvolutionSpec::with_max_step(
            Hamiltonian::TavisCummings { g: 1.0, n_atoms: 2 },
            vec![Dissipator::new(0.1, Channel::MechDecay { n_th: 0.2 })],
            1.0,
            4,
        );
        let a = evolve_quantum(&psi, &spec).unwrap();
        let b = evolve_quantum(&psi, &spec).unwrap();
        assert_eq!(a.csv(), b.csv());
        assert_eq!(a.final_state.rho, b.final_state.rho);
    }

    #[test]
    fn cutoff_selection() {
        assert_eq!(default_mech_levels(0.0), 20);
        assert_eq!(default_mech_levels(4.0), 40);
        let l = mech_levels_for_thermal(2.0, 1e-7);
        let p = thermal_distribution(2.0, l);
        let s: f64 = p.iter().sum();
        assert!((p[l - 1] + p[l - 2]) / s < 1e-7);
        let p = thermal_distribution(2.0, l - 1);
        let s: f64 = p.iter().sum();
        assert!((p[l - 2] + p[l - 3]) / s >= 1e-7);
    }
}
