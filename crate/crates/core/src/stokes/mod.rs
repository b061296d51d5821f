//! Mixed velocity/pressure Stokes problems: the rescaled fine problem with
//! slip walls and the cell problems, as sparse saddle-point systems.

mod assembly;
mod bc;
mod fine;
mod flux;
mod solve;

use thiserror::Error;

pub use assembly::{
    assemble_system, DofMap, PressureGauge, SaddleSystem, StokesParameters, DEFAULT_DELTA,
};
pub use bc::{
    BoundaryCondition, BoundaryConditionSpec, FaceTable, ObstacleFace, RobinParameters,
    SurfaceForcing, VolumeForcing,
};
pub use fine::{solve_fine_problem, FineProblem, FineSolution};
pub use flux::{
    boundary_flux, divergence_identity, energy_balance, stabilization_form,
    velocity_gradient_pairing, weighted_boundary_flux, DivergenceIdentity, EnergyBalance,
    FluxReport,
};
pub use solve::{divergence_l2, solve_saddle, Factorization, SolverDiagnostics, StokesSolution};

use crate::discretization::MeshError;
use crate::geometry::{BoundaryTag, GeometryError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StokesError {
    #[error("boundary condition does not match mesh tag {0:?}")]
    InconsistentTags(BoundaryTag),
    #[error("mesh has no facets tagged {0:?}")]
    UnknownTag(BoundaryTag),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("sparse LU failed at pivot {pivot}: {detail}")]
    FactorizationFailure { pivot: usize, detail: String },
    #[error("singular system: relative residual {residual:e} after refinement")]
    SingularSystem { residual: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}
