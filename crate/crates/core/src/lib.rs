//! Necklace model of a two-dimensional vesicle.
//!
//! The membrane is a closed chain of `N` rigid circular discs held together
//! by stretching springs and by angular (bending) springs on every triplet of
//! consecutive discs. The discs are immersed in an incompressible Stokes flow
//! solved on a fixed triangulation; their rigidity is imposed by a penalty on
//! the strain rate inside the discs. After each fluid solve the disc
//! velocities are projected onto the admissible set that forbids overlaps,
//! keeps neighbours in contact, and preserves the enclosed area.
//!
//! Module map:
//!
//! * [`necklace`]: disc-chain geometry, energies, forces, polygon measures.
//! * [`fem`]: mesh, quadrature, coefficient sampling, penalized Stokes solver.
//! * [`projection`]: linearized contact/area constraints and their projections.
//! * [`simulation`]: scenario configuration, initial placement, time stepping.
//! * [`diagnostics`]: dimensionless numbers, inclination, regime classification.

pub mod diagnostics;
pub mod fem;
pub mod necklace;
pub mod projection;
pub mod simulation;

/// Two-dimensional vector used for positions, velocities and forces.
pub type Vec2 = nalgebra::Vector2<f64>;

pub use diagnostics::{DiagnosticsRecord, Regime};
pub use fem::{FlowField, FluidMesh, FluidParams, StokesSolver};
pub use necklace::{ForceSet, MembraneParams, NecklaceState};
pub use simulation::{ScenarioConfig, ScenarioKind, Simulation, Trajectory};
