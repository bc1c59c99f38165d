//! Calculators for the concrete coupling proposals. Each one turns its own
//! parameter set into a [`CouplingBudget`](crate::coupling::CouplingBudget)
//! through the generic engine, plus the observables specific to the scheme.

pub mod bec_surface;
pub mod cavity;
pub mod cnt;
pub mod ion;
pub mod lattice;
pub mod magnetic;

pub use bec_surface::{
    bec_surface_budget, tof_detection_amplitude, BecSurfaceParams, BecSurfaceReport, Placement,
};
pub use cavity::CavitySchemeRecord;
pub use cnt::{cnt_budget, CntParams, CntReport, CntVariant};
pub use ion::{ion_budget, required_voltage, IonReport, IonSchemeParams, TipCharge};
pub use lattice::{
    lattice_backaction, lattice_budget, lattice_cooling, LatticeCooling, LatticeReport,
    LatticeSchemeParams,
};
pub use magnetic::{magnetic_budget, MagneticReport, MagneticSchemeParams, ZeemanLeg};
