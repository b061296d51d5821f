//! The rescaled fine problem on the perforated layer.

use std::sync::Arc;

use super::assembly::{assemble_system, SaddleSystem, StokesParameters, DEFAULT_DELTA};
use super::bc::{BoundaryConditionSpec, RobinParameters, SurfaceForcing, VolumeForcing};
use super::solve::{solve_saddle, StokesSolution};
use super::StokesError;
use crate::discretization::{AnisotropyParameter, Mesh};
use crate::geometry::{build_perforated_domain, PerforatedDomain, Rect, UnitCell};

/// Data of one fine solve on `omega_eps x (0,1)`.
#[derive(Debug, Clone)]
pub struct FineProblem {
    pub epsilon: f64,
    pub cell: UnitCell,
    pub omega: Rect,
    /// Horizontal elements per lattice cell (`h = eps / subdivisions`).
    pub subdivisions: usize,
    pub layers: usize,
    pub mu: f64,
    pub robin: RobinParameters,
    /// Horizontal volume forcing `f'`.
    pub f_prime: [f64; 2],
    /// Apply `f'_eps = f'/eps`; otherwise `f'` is used as given.
    pub scale_forcing: bool,
    pub delta: f64,
    /// Lateral periodicity of the layer; the default closed layer has none.
    pub periodic: [bool; 2],
}

impl FineProblem {
    pub fn new(epsilon: f64, cell: UnitCell) -> Self {
        FineProblem {
            epsilon,
            cell,
            omega: Rect::UNIT_SQUARE,
            subdivisions: 4,
            layers: 8,
            mu: 1.0,
            robin: RobinParameters {
                alpha: 1.0,
                gamma: 0.0,
                g: SurfaceForcing::Zero,
            },
            f_prime: [0.0; 2],
            scale_forcing: true,
            delta: DEFAULT_DELTA,
            periodic: [false, false],
        }
    }

    pub fn horizontal_spacing(&self) -> f64 {
        self.epsilon / self.subdivisions as f64
    }

    /// Volume forcing actually applied.
    pub fn applied_forcing(&self) -> [f64; 3] {
        let s = if self.scale_forcing { 1.0 / self.epsilon } else { 1.0 };
        [s * self.f_prime[0], s * self.f_prime[1], 0.0]
    }
}

#[derive(Debug, Clone)]
pub struct FineSolution {
    pub domain: PerforatedDomain,
    pub mesh: Arc<Mesh>,
    pub system: SaddleSystem,
    pub solution: StokesSolution,
}

/// Builds the layer, assembles the rescaled weak form and solves it.
pub fn solve_fine_problem(problem: &FineProblem) -> Result<FineSolution, StokesError> {
    let domain = build_perforated_domain(problem.epsilon, problem.cell, problem.omega)?;
    let mesh = Arc::new(Mesh::perforated_with_periodicity(
        &domain,
        problem.horizontal_spacing(),
        problem.layers,
        problem.periodic,
    )?);
    let eps = AnisotropyParameter::new(problem.epsilon)
        .map_err(|e| StokesError::InvalidParameter(e.to_string()))?;
    let params = StokesParameters {
        mu: problem.mu,
        anisotropy: eps,
        forcing: VolumeForcing::Constant(problem.applied_forcing()),
        delta: problem.delta,
    };
    let bc = BoundaryConditionSpec::fine_problem(&problem.robin, problem.epsilon);
    let system = assemble_system(mesh.clone(), &bc, &params)?;
    let solution = solve_saddle(&system)?;
    Ok(FineSolution {
        domain,
        mesh,
        system,
        solution,
    })
}
