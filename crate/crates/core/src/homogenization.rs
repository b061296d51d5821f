//! Cell problems, the permeability tensor and the three effective Darcy laws.
//!
//! The cell problem is posed on `Y_f = Y'_f x (0,1)`: periodic in `y'`, no
//! slip on `y3 in {0,1}`, homogeneous natural condition on the obstacle wall,
//! unit forcing `e_i`, unit viscosity and no anisotropy. Its solutions give
//! `A_ij = (1/|Y_f|) int D w^i : D w^j`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::discretization::{AnisotropyParameter, Field, Mesh, MeshError};
use crate::geometry::{BoundaryTag, UnitCell};
use crate::stokes::{
    assemble_system, solve_saddle, BoundaryConditionSpec, SolverDiagnostics, StokesError,
    StokesParameters, VolumeForcing, DEFAULT_DELTA,
};

/// `|A_12 - A_21| <= ASYMMETRY_TOLERANCE * ||A||`.
pub const ASYMMETRY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HomogenizationError {
    #[error(transparent)]
    Stokes(#[from] StokesError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("permeability asymmetry {asymmetry:e} exceeds tolerance for |A| = {norm:e}")]
    AsymmetryExceedsTolerance { asymmetry: f64, norm: f64 },
    #[error("high-gamma law needs a permeability tensor")]
    MissingPermeability,
    #[error("empty obstacle has mu1 = 0; the slip-dominated laws are singular")]
    ZeroMu1,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Which effective law governs a given `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimeKind {
    /// `gamma < -1`: slip friction dominates.
    LowGamma,
    /// `-1 <= gamma < 1`: friction and surface forcing balance.
    MidGamma,
    /// `gamma >= 1`: the walls act as no-slip; Darcy with the cell permeability.
    HighGamma,
}

impl RegimeKind {
    pub fn label(&self) -> &'static str {
        match self {
            RegimeKind::LowGamma => "low",
            RegimeKind::MidGamma => "mid",
            RegimeKind::HighGamma => "high",
        }
    }
}

impl fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Regime of `gamma` together with the a-priori scaling exponents:
/// `||u|| <~ eps^velocity`, `||D_eps u|| <~ eps^gradient`, `||p|| <~ eps^pressure`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    pub gamma: f64,
    pub kind: RegimeKind,
    pub velocity_exponent: f64,
    pub gradient_exponent: f64,
    pub pressure_exponent: f64,
}

/// Partition `(-inf, -1) | [-1, 1) | [1, inf)`.
///
/// Panics if `gamma` is not finite.
pub fn classify_regime(gamma: f64) -> Regime {
    assert!(gamma.is_finite(), "gamma must be finite, got {gamma}");
    if gamma < -1.0 {
        Regime {
            gamma,
            kind: RegimeKind::LowGamma,
            velocity_exponent: 1.0,
            gradient_exponent: 0.0,
            pressure_exponent: gamma,
        }
    } else if gamma < 1.0 {
        Regime {
            gamma,
            kind: RegimeKind::MidGamma,
            velocity_exponent: -gamma,
            gradient_exponent: -(1.0 + gamma) / 2.0,
            pressure_exponent: -1.0,
        }
    } else {
        Regime {
            gamma,
            kind: RegimeKind::HighGamma,
            velocity_exponent: -1.0,
            gradient_exponent: -1.0,
            pressure_exponent: -2.0,
        }
    }
}

/// Mesh of `Y_f` for the cell problems: periodic lateral faces.
pub fn cell_mesh(cell: &UnitCell, h: f64, layers: usize) -> Result<Arc<Mesh>, HomogenizationError> {
    Ok(Arc::new(Mesh::unit_cell(cell, h, Some(layers), true)?))
}

/// `(w^i, q^i)` for forcing `e_i`.
#[derive(Debug, Clone)]
pub struct CellSolution {
    /// Forcing direction, 0 or 1.
    pub index: usize,
    pub velocity: Field,
    /// Mean-zero pressure.
    pub pressure: Field,
    pub divergence_l2: f64,
    /// `int |D w^i|^2`.
    pub energy: f64,
    /// Stabilization energy `s(q^i, q^i)`.
    pub stabilization: f64,
    pub diagnostics: SolverDiagnostics,
}

/// Solves the cell problem with forcing `e_index` on a periodic cell mesh.
pub fn solve_cell_problem(
    mesh: Arc<Mesh>,
    index: usize,
    delta: f64,
) -> Result<CellSolution, HomogenizationError> {
    if index > 1 {
        return Err(HomogenizationError::InvalidInput(format!(
            "cell problem index {index} (expected 0 or 1)"
        )));
    }
    if mesh.dim() != 3 || mesh.lattice().is_some() || mesh.periodic() != [true, true] {
        return Err(HomogenizationError::InvalidInput(
            "cell problems need the periodic 3D cell mesh".into(),
        ));
    }
    let mut e = [0.0; 3];
    e[index] = 1.0;
    let params = StokesParameters {
        mu: 1.0,
        anisotropy: AnisotropyParameter::isotropic(),
        forcing: VolumeForcing::Constant(e),
        delta,
    };
    let system = assemble_system(mesh, &BoundaryConditionSpec::cell_problem(), &params)?;
    let sol = solve_saddle(&system)?;
    let energy = sol.velocity.d_eps_norm_squared(1.0);
    let stabilization =
        crate::stokes::stabilization_form(&sol.pressure, &sol.pressure, delta, 1.0);
    Ok(CellSolution {
        index,
        divergence_l2: sol.diagnostics.divergence_l2,
        energy,
        stabilization,
        diagnostics: sol.diagnostics,
        velocity: sol.velocity,
        pressure: sol.pressure,
    })
}

/// The two-by-two permeability tensor with the data it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct PermeabilityTensor {
    /// `A_ij` from the energy formula.
    pub entries: [[f64; 2]; 2],
    /// `(1/|Y_f|) int w^i . e_j`, the load formula.
    pub load_entries: [[f64; 2]; 2],
    /// Discrete fluid volume `|Y_f|` used for both normalizations.
    pub fluid_volume: f64,
    /// Horizontal spacing of the cell mesh.
    pub h: f64,
    pub layers: usize,
    /// `max_ij |energy - load| / ||A||`.
    pub cross_check: f64,
    /// Worst solver residual of the two cell solves.
    pub solver_residual: f64,
}

impl PermeabilityTensor {
    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.entries.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn asymmetry(&self) -> f64 {
        (self.entries[0][1] - self.entries[1][0]).abs()
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.entries[0][0];
        let d = self.entries[1][1];
        let b = 0.5 * (self.entries[0][1] + self.entries[1][0]);
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [mean - radius, mean + radius]
    }

    pub fn is_positive_definite(&self) -> bool {
        self.eigenvalues()[0] > 0.0
    }

    /// `|A_11 - A_22| / max(|A_11|, |A_22|)`.
    pub fn diagonal_mismatch(&self) -> f64 {
        let (a, d) = (self.entries[0][0], self.entries[1][1]);
        let scale = a.abs().max(d.abs());
        if scale == 0.0 {
            0.0
        } else {
            (a - d).abs() / scale
        }
    }

    /// `A g` for a 2-vector `g`.
    pub fn apply(&self, g: [f64; 2]) -> [f64; 2] {
        let a = &self.entries;
        [a[0][0] * g[0] + a[0][1] * g[1], a[1][0] * g[0] + a[1][1] * g[1]]
    }
}

/// Builds `A` from the two cell solutions on one mesh.
pub fn assemble_permeability(
    solutions: &[CellSolution; 2],
) -> Result<PermeabilityTensor, HomogenizationError> {
    let mesh = solutions[0].velocity.mesh();
    if solutions[1].velocity.mesh() != mesh || solutions[0].index != 0 || solutions[1].index != 1 {
        return Err(HomogenizationError::InvalidInput(
            "need w^1 and w^2 on the same cell mesh".into(),
        ));
    }
    let volume = mesh.fluid_volume();
    let mut entries = [[0.0; 2]; 2];
    let mut load_entries = [[0.0; 2]; 2];
    for i in 0..2 {
        let wi = &solutions[i].velocity;
        let integral = wi.integrate();
        for j in 0..2 {
            let wj = &solutions[j].velocity;
            entries[i][j] = wi.d_eps_inner(wj, 1.0) / volume;
            load_entries[i][j] = integral[j] / volume;
        }
    }
    let mut tensor = PermeabilityTensor {
        entries,
        load_entries,
        fluid_volume: volume,
        h: mesh.spacing()[0],
        layers: mesh.cells()[2],
        cross_check: 0.0,
        solver_residual: solutions
            .iter()
            .map(|s| s.diagnostics.relative_residual)
            .fold(0.0, f64::max),
    };
    let norm = tensor.norm();
    let diff = (0..4)
        .map(|k| (entries[k / 2][k % 2] - load_entries[k / 2][k % 2]).abs())
        .fold(0.0, f64::max);
    tensor.cross_check = if norm == 0.0 { diff } else { diff / norm };
    if !(tensor.asymmetry() <= ASYMMETRY_TOLERANCE * norm) {
        return Err(HomogenizationError::AsymmetryExceedsTolerance {
            asymmetry: tensor.asymmetry(),
            norm,
        });
    }
    Ok(tensor)
}

/// Cell study result: the tensor and the cell solutions behind it.
#[derive(Debug, Clone)]
pub struct CellStudy {
    pub tensor: PermeabilityTensor,
    pub solutions: [CellSolution; 2],
}

/// Solves both cell problems (concurrently) and assembles `A`.
pub fn compute_permeability(
    cell: &UnitCell,
    h: f64,
    layers: usize,
    delta: f64,
) -> Result<CellStudy, HomogenizationError> {
    let mesh = cell_mesh(cell, h, layers)?;
    let (first, second) = std::thread::scope(|scope| {
        let m = mesh.clone();
        let handle = scope.spawn(move || solve_cell_problem(m, 1, delta));
        let first = solve_cell_problem(mesh.clone(), 0, delta);
        (first, handle.join().expect("cell solve thread"))
    });
    let solutions = [first?, second?];
    let tensor = assemble_permeability(&solutions)?;
    Ok(CellStudy { tensor, solutions })
}

/// [`compute_permeability`] with the default stabilization.
pub fn permeability(cell: &UnitCell, h: f64, layers: usize) -> Result<CellStudy, HomogenizationError> {
    compute_permeability(cell, h, layers, DEFAULT_DELTA)
}

/// Richardson extrapolation `A* = A_f + (A_f - A_c) / (r^order - 1)` for
/// tensors at spacings `h` and `h / r`.
pub fn richardson_reference(
    coarse: &PermeabilityTensor,
    fine: &PermeabilityTensor,
    order: f64,
) -> [[f64; 2]; 2] {
    let ratio = coarse.h / fine.h;
    let factor = 1.0 / (ratio.powf(order) - 1.0);
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let (c, f) = (coarse.entries[i][j], fine.entries[i][j]);
            out[i][j] = f + (f - c) * factor;
        }
    }
    out
}

/// Largest entry-wise distance between a tensor and a reference.
pub fn tensor_distance(a: &PermeabilityTensor, reference: &[[f64; 2]; 2]) -> f64 {
    (0..4)
        .map(|k| (a.entries[k / 2][k % 2] - reference[k / 2][k % 2]).abs())
        .fold(0.0, f64::max)
}

/// Data of the effective laws.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveInputs {
    pub theta: f64,
    pub mu1: f64,
    pub alpha: f64,
    pub mu: f64,
    pub grad_p: [f64; 2],
    /// Limit of `eps f'_eps`.
    pub f_prime: [f64; 2],
    /// Mean of `g'` over the obstacle wall.
    pub g_mean: [f64; 2],
    pub permeability: Option<[[f64; 2]; 2]>,
}

impl EffectiveInputs {
    /// Geometric constants from `cell`, everything else zero or unit.
    pub fn for_cell(cell: &UnitCell) -> Self {
        EffectiveInputs {
            theta: cell.theta,
            mu1: cell.mu1,
            alpha: 1.0,
            mu: 1.0,
            grad_p: [0.0; 2],
            f_prime: [0.0; 2],
            g_mean: [0.0; 2],
            permeability: None,
        }
    }
}

/// Averaged velocity `v~ = int_0^1 u~ dy3` under the regime's law; the
/// vertical component is always zero.
pub fn effective_velocity(
    regime: &Regime,
    inputs: &EffectiveInputs,
) -> Result<[f64; 3], HomogenizationError> {
    if !(inputs.alpha > 0.0) || !(inputs.mu > 0.0) {
        return Err(HomogenizationError::InvalidInput(format!(
            "alpha and mu must be positive (alpha = {}, mu = {})",
            inputs.alpha, inputs.mu
        )));
    }
    let gp = inputs.grad_p;
    match regime.kind {
        RegimeKind::LowGamma | RegimeKind::MidGamma => {
            if inputs.mu1 == 0.0 {
                return Err(HomogenizationError::ZeroMu1);
            }
            let k = inputs.theta / (inputs.alpha * inputs.mu1);
            let v = if regime.kind == RegimeKind::LowGamma {
                [-k * gp[0], -k * gp[1]]
            } else {
                let drive = |c: usize| inputs.f_prime[c] - gp[c] + inputs.mu1 * inputs.g_mean[c];
                [k * drive(0), k * drive(1)]
            };
            Ok([v[0], v[1], 0.0])
        }
        RegimeKind::HighGamma => {
            let a = inputs
                .permeability
                .ok_or(HomogenizationError::MissingPermeability)?;
            let k = inputs.theta / inputs.mu;
            let v = [
                -k * (a[0][0] * gp[0] + a[0][1] * gp[1]),
                -k * (a[1][0] * gp[0] + a[1][1] * gp[1]),
            ];
            Ok([v[0], v[1], 0.0])
        }
    }
}

/// [`effective_velocity`] for a sampled pressure gradient.
pub fn effective_velocity_field(
    regime: &Regime,
    inputs: &EffectiveInputs,
    grad_p: &[[f64; 2]],
) -> Result<Vec<[f64; 3]>, HomogenizationError> {
    let mut local = inputs.clone();
    grad_p
        .iter()
        .map(|g| {
            local.grad_p = *g;
            effective_velocity(regime, &local)
        })
        .collect()
}

/// Whether a cell mesh has obstacle walls at all.
pub fn has_walls(mesh: &Mesh) -> bool {
    mesh.has_tag(BoundaryTag::Obstacle)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regime_boundaries() {
        assert_eq!(classify_regime(-2.0).kind, RegimeKind::LowGamma);
        assert_eq!(classify_regime(-1.0 - 1e-12).kind, RegimeKind::LowGamma);
        assert_eq!(classify_regime(-1.0).kind, RegimeKind::MidGamma);
        assert_eq!(classify_regime(1.0 - 1e-12).kind, RegimeKind::MidGamma);
        assert_eq!(classify_regime(1.0).kind, RegimeKind::HighGamma);
        let low = classify_regime(-2.0);
        assert_eq!(low.velocity_exponent, 1.0);
        assert_eq!(low.pressure_exponent, -2.0);
        let mid = classify_regime(0.0);
        assert_eq!(mid.gradient_exponent, -0.5);
        assert_eq!(mid.pressure_exponent, -1.0);
    }

    #[test]
    #[should_panic]
    fn regime_needs_finite_gamma() {
        classify_regime(f64::NAN);
    }

    #[test]
    fn eigenvalues_of_diagonal_tensor() {
        let t = PermeabilityTensor {
            entries: [[2.0, 0.0], [0.0, 3.0]],
            load_entries: [[2.0, 0.0], [0.0, 3.0]],
            fluid_volume: 1.0,
            h: 0.1,
            layers: 1,
            cross_check: 0.0,
            solver_residual: 0.0,
        };
        assert_eq!(t.eigenvalues(), [2.0, 3.0]);
        assert!(t.is_positive_definite());
        assert_eq!(t.apply([1.0, 1.0]), [2.0, 3.0]);
    }

    #[test]
    fn effective_law_errors() {
        let mut inputs = EffectiveInputs {
            theta: 1.0,
            mu1: 0.0,
            alpha: 1.0,
            mu: 1.0,
            grad_p: [1.0, 0.0],
            f_prime: [0.0; 2],
            g_mean: [0.0; 2],
            permeability: None,
        };
        assert_eq!(
            effective_velocity(&classify_regime(-2.0), &inputs),
            Err(HomogenizationError::ZeroMu1)
        );
        assert_eq!(
            effective_velocity(&classify_regime(0.0), &inputs),
            Err(HomogenizationError::ZeroMu1)
        );
        assert_eq!(
            effective_velocity(&classify_regime(2.0), &inputs),
            Err(HomogenizationError::MissingPermeability)
        );
        inputs.alpha = 0.0;
        inputs.mu1 = 1.0;
        assert!(matches!(
            effective_velocity(&classify_regime(0.0), &inputs),
            Err(HomogenizationError::InvalidInput(_))
        ));
    }
}
