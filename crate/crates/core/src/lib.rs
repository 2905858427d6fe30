//! Finite-element heat conduction with water–ice phase change in porous ground.
//!
//! The crate covers tetrahedral meshing, temperature-dependent material
//! coefficients, P1 assembly with a lumped capacity matrix, a preconditioned
//! conjugate-gradient solver, the seasonal time loop and file output.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod fem;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod physics;
pub mod simulate;
pub mod verify;

pub use fem::{implicit_step, Discretization, FemError, TemperatureField};
pub use linalg::{CgSettings, CsrMatrix, SolveReport};
pub use mesh::{Mesh, MeshError, Point, Tag};
pub use physics::{Material, MaterialTable, PhaseModel, SeasonalForcing};
pub use simulate::{run, SimError, Simulation, SimulationConfig, StepRecord};
