//! Time-domain simulation: classical two-body motion and Lindblad evolution of
//! the linearized coupled system.

pub mod classical;
pub mod cooling;
pub mod quantum;

pub use classical::{
    integrate_classical, ClassicalOptions, ClassicalState, ClassicalSystem, ClassicalTrajectory,
    RunSummary,
};
pub use cooling::{
    swap_cool, sympathetic_cooling_crosscheck, CoolingCrosscheck, MechInitial, SwapDissipation,
    SwapResult, ToyCooling,
};
pub use quantum::{
    evolve_quantum, AtomSector, Basis, Channel, Dissipator, EvolutionSpec, Hamiltonian,
    QuantumState, QuantumTrajectory,
};
