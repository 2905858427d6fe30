//! Closed-form oracles: the melting-front similarity solution and
//! manufactured solutions with their source terms.

mod erf;
mod mms;
mod neumann;

pub use erf::{erf, erfc};
pub use mms::{
    affine_exactness, lumped_l2, run_mms, spatial_study, temporal_study, ConvergenceStudy,
    ManufacturedSolution, MmsRun,
};
pub use neumann::{
    axis_nodes, bar_mesh, benchmark_case, benchmark_duration, default_delta, default_tau,
    front_position, neumann_lambda, refinement_levels, run_diffusion_benchmark,
    run_neumann_benchmark, FrontSample, NeumannCase, NeumannReport, BAR_LENGTH, FRONT_REACH,
};

use crate::fem::FemError;
use crate::mesh::MeshError;
use crate::physics::PhysicsError;

#[derive(Debug, thiserror::Error)]
pub enum VerifyError {
    #[error("Stefan number {0} is outside the solvable range")]
    Stefan(f64),
    #[error("invalid benchmark setup: {0}")]
    Setup(String),
    #[error("solver did not converge at step {step}")]
    NotConverged { step: usize },
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
}
