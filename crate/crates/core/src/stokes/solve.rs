//! Sparse direct solution of the saddle-point system.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, CholeskySymbolicParams, SymmetricOrdering,
};
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::{Conj, Mat, Par, Side};

use super::assembly::{PressureGauge, SaddleSystem};
use super::StokesError;
use crate::discretization::{Field, gauss_rule};

const REFINEMENT_STEPS: usize = 3;
/// Relative residual above which the factorization is declared unusable.
const SINGULAR_RESIDUAL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverDiagnostics {
    pub unknowns: usize,
    pub nonzeros: usize,
    /// `||b - K x||_inf / max(||b||_inf, tiny)` after refinement.
    pub relative_residual: f64,
    pub refinement_steps: usize,
    /// `||div_eps u||_{L^2}` of the discrete velocity.
    pub divergence_l2: f64,
    pub gauge: PressureGauge,
    pub factorization: Factorization,
    /// Value of the mean-pressure multiplier, if any.
    pub multiplier: Option<f64>,
}

/// Velocity and pressure of a Stokes solve.
#[derive(Debug, Clone)]
pub struct StokesSolution {
    pub velocity: Field,
    /// Pressure with its mean over the fluid region removed.
    pub pressure: Field,
    /// Mean removed from the solved pressure (zero up to rounding when the
    /// multiplier gauge is active).
    pub pressure_offset: f64,
    pub diagnostics: SolverDiagnostics,
}

impl StokesSolution {
    /// The pressure exactly as solved, before removing its mean.
    pub fn raw_pressure(&self) -> Field {
        self.pressure.shifted(-self.pressure_offset)
    }
}

fn infinity_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `||div_eps u||_{L^2}` by 2-point Gauss quadrature (exact for multilinear `u`).
pub fn divergence_l2(u: &Field, epsilon: f64) -> f64 {
    let mesh = u.mesh();
    let dim = mesh.dim();
    let rule = gauss_rule(dim, 2);
    let vol = mesh.element_volume();
    let mut total = 0.0;
    for e in mesh.fluid_elements() {
        for (t, w) in &rule {
            let mut div = 0.0;
            for axis in 0..dim {
                let s = if axis == 2 { 1.0 / epsilon } else { 1.0 };
                div += s * u.derivative_in_element(e, *t, axis)[axis];
            }
            total += w * vol * div * div;
        }
    }
    total.sqrt()
}

/// Direct factorization used by a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factorization {
    /// Symmetric indefinite `L B L^T` (Bunch-Kaufman pivoting inside
    /// supernodes) on an approximate-minimum-degree ordering.
    SymmetricIndefinite,
    /// Unsymmetric LU with partial pivoting, used when the symmetric factor
    /// does not reach the residual target.
    Lu,
}

/// Residual target accepted from the symmetric factorization.
const SYMMETRIC_ACCEPT: f64 = 1e-11;

struct Refined {
    x: Vec<f64>,
    relative_residual: f64,
    steps: usize,
}

/// Solves with `solve` and applies iterative refinement against the stored matrix.
fn refine(system: &SaddleSystem, solve: impl Fn(&[f64]) -> Vec<f64>) -> Refined {
    let b = system.rhs();
    let n = b.len();
    let b_norm = infinity_norm(b);
    if b_norm == 0.0 {
        return Refined {
            x: vec![0.0; n],
            relative_residual: 0.0,
            steps: 0,
        };
    }
    let residual = |x: &[f64]| -> Vec<f64> {
        let kx = system.apply(x);
        b.iter().zip(kx).map(|(bi, ki)| bi - ki).collect()
    };
    let mut x = solve(b);
    if x.iter().any(|v| !v.is_finite()) {
        return Refined {
            x,
            relative_residual: f64::INFINITY,
            steps: 0,
        };
    }
    let mut r = residual(&x);
    let mut rel = infinity_norm(&r) / b_norm;
    let mut steps = 0;
    while steps < REFINEMENT_STEPS && rel > 1e-15 {
        let dx = solve(&r);
        let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
        let r_trial = residual(&trial);
        let rel_trial = infinity_norm(&r_trial) / b_norm;
        steps += 1;
        if !(rel_trial < rel) {
            break;
        }
        x = trial;
        r = r_trial;
        rel = rel_trial;
    }
    Refined {
        x,
        relative_residual: rel,
        steps,
    }
}

fn matrix(system: &SaddleSystem) -> SparseColMat<usize, f64> {
    let n = system.size();
    let symbolic = SymbolicSparseColMat::<usize>::new_checked(
        n,
        n,
        system.col_ptr().to_vec(),
        None,
        system.row_idx().to_vec(),
    );
    SparseColMat::<usize, f64>::new(symbolic, system.values().to_vec())
}

fn solve_symmetric(system: &SaddleSystem, a: &SparseColMat<usize, f64>) -> Option<Refined> {
    let n = system.size();
    let par = Par::Seq;
    let symbolic = factorize_symbolic_cholesky(
        a.symbolic(),
        Side::Lower,
        SymmetricOrdering::Amd,
        CholeskySymbolicParams::default(),
    )
    .ok()?;
    let mut fwd = vec![0usize; n];
    let mut bwd = vec![0usize; n];
    let mut subdiag = vec![0.0; n];
    let mut l_values = vec![0.0; symbolic.len_val()];
    let mut buffer = MemBuffer::new(
        symbolic.factorize_numeric_intranode_lblt_scratch::<f64>(par, Default::default()),
    );
    let lblt = symbolic.factorize_numeric_intranode_lblt(
        &mut l_values,
        &mut subdiag,
        &mut fwd,
        &mut bwd,
        a.as_ref(),
        Side::Lower,
        par,
        MemStack::new(&mut buffer),
        Default::default(),
    );
    let solve_buffer = std::cell::RefCell::new(MemBuffer::new(
        lblt.solve_in_place_scratch::<f64>(1, par),
    ));
    let refined = refine(system, |rhs| {
        let mut m = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        lblt.solve_in_place_with_conj(
            Conj::No,
            m.as_mut(),
            par,
            MemStack::new(&mut solve_buffer.borrow_mut()),
        );
        (0..n).map(|i| m[(i, 0)]).collect()
    });
    Some(refined)
}

fn solve_lu(system: &SaddleSystem, a: &SparseColMat<usize, f64>) -> Result<Refined, StokesError> {
    let n = system.size();
    let lu = a.sp_lu().map_err(|e| match e {
        LuError::SymbolicSingular { index } => StokesError::FactorizationFailure {
            pivot: index,
            detail: "structurally singular".into(),
        },
        LuError::Generic(err) => StokesError::FactorizationFailure {
            pivot: 0,
            detail: format!("{err:?}"),
        },
    })?;
    Ok(refine(system, |rhs| {
        let mut m = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        lu.solve_in_place(m.as_mut());
        (0..n).map(|i| m[(i, 0)]).collect()
    }))
}

/// Factorizes, solves and applies a few steps of iterative refinement.
///
/// The symmetric indefinite factorization is tried first; if it does not
/// reach the residual target the system is refactorized with sparse LU.
pub fn solve_saddle(system: &SaddleSystem) -> Result<StokesSolution, StokesError> {
    // sequential kernels keep repeated runs bit-identical
    faer::set_global_parallelism(Par::Seq);
    let a = matrix(system);
    let (refined, factorization) = match solve_symmetric(system, &a) {
        Some(r) if r.relative_residual <= SYMMETRIC_ACCEPT => (r, Factorization::SymmetricIndefinite),
        _ => (solve_lu(system, &a)?, Factorization::Lu),
    };
    let rel = refined.relative_residual;
    if !(rel <= SINGULAR_RESIDUAL) {
        return Err(StokesError::SingularSystem { residual: rel });
    }
    let x = refined.x;
    let steps = refined.steps;
    let n = system.size();

    let mesh = system.mesh().clone();
    let dofs = system.dofs();
    let dim = mesh.dim();
    let k = dofs.components();
    let nodes = mesh.node_count();
    let mut u = vec![0.0; nodes * dim];
    let mut p = vec![0.0; nodes];
    for node in 0..nodes {
        for c in 0..k {
            let v = match dofs.index(node, c) {
                Some(i) => x[i],
                None => dofs.prescribed(node, c),
            };
            if c < dim {
                u[node * dim + c] = v;
            } else {
                p[node] = v;
            }
        }
    }
    let velocity = Field::from_values(mesh.clone(), dim, u);
    let raw = Field::from_values(mesh, 1, p);
    let offset = raw.mean()[0];
    let pressure = raw.shifted(offset);
    let eps = system.anisotropy().epsilon();
    let diagnostics = SolverDiagnostics {
        unknowns: n,
        nonzeros: system.nnz(),
        relative_residual: rel,
        refinement_steps: steps,
        divergence_l2: divergence_l2(&velocity, eps),
        gauge: system.gauge(),
        factorization,
        multiplier: dofs.multiplier().map(|m| x[m]),
    };
    Ok(StokesSolution {
        velocity,
        pressure,
        pressure_offset: offset,
        diagnostics,
    })
}
