//! Assembly of the stabilized equal-order saddle-point system.
//!
//! Unknowns are interleaved per active node as `[u_1, .., u_dim, p]`.
//! Dirichlet velocity values are eliminated; the remaining unknowns keep the
//! node order, which makes the sparsity pattern symmetric, so compressed
//! columns double as compressed rows.

use std::sync::Arc;

use super::bc::{BoundaryCondition, BoundaryConditionSpec, VolumeForcing};
use super::StokesError;
use crate::discretization::{AnisotropyParameter, ElementMatrices, Mesh};
use crate::geometry::BoundaryTag;

const NOT_FREE: u32 = u32::MAX;

/// Coefficients of the weak form.
#[derive(Debug, Clone)]
pub struct StokesParameters {
    pub mu: f64,
    pub anisotropy: AnisotropyParameter,
    pub forcing: VolumeForcing,
    /// Pressure stabilization factor `delta`.
    pub delta: f64,
}

impl StokesParameters {
    pub fn new(mu: f64, anisotropy: AnisotropyParameter, forcing: VolumeForcing) -> Self {
        StokesParameters {
            mu,
            anisotropy,
            forcing,
            delta: DEFAULT_DELTA,
        }
    }
}

pub const DEFAULT_DELTA: f64 = 0.1;

/// How the additive pressure constant is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PressureGauge {
    /// Constants are in the kernel; a multiplier enforces zero mean.
    MeanZeroMultiplier,
    /// Natural walls determine the pressure level; no multiplier is added.
    Determined,
}

/// Map from interleaved node unknowns to system rows.
#[derive(Debug, Clone)]
pub struct DofMap {
    components: usize,
    free: Vec<u32>,
    prescribed: Vec<f64>,
    free_count: usize,
    multiplier: Option<usize>,
}

impl DofMap {
    /// Unknowns per node (`dim` velocity components and the pressure).
    pub fn components(&self) -> usize {
        self.components
    }

    pub fn full_count(&self) -> usize {
        self.free.len()
    }

    pub fn free_count(&self) -> usize {
        self.free_count
    }

    /// System row of node unknown `(node, c)`, `None` if prescribed.
    pub fn index(&self, node: usize, c: usize) -> Option<usize> {
        let f = self.free[node * self.components + c];
        (f != NOT_FREE).then_some(f as usize)
    }

    /// Prescribed value of a node unknown (zero for free ones).
    pub fn prescribed(&self, node: usize, c: usize) -> f64 {
        self.prescribed[node * self.components + c]
    }

    pub fn is_prescribed(&self, node: usize, c: usize) -> bool {
        self.free[node * self.components + c] == NOT_FREE
    }

    pub fn multiplier(&self) -> Option<usize> {
        self.multiplier
    }
}

/// Sparse saddle-point system
/// `[A B^T 0; B -S m; 0 m^T 0]` in compressed-column form.
#[derive(Debug, Clone)]
pub struct SaddleSystem {
    mesh: Arc<Mesh>,
    dofs: DofMap,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    rhs: Vec<f64>,
    load: Vec<f64>,
    gauge: PressureGauge,
    mu: f64,
    anisotropy: AnisotropyParameter,
    delta: f64,
    robin: Vec<(BoundaryTag, f64)>,
}

impl SaddleSystem {
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn size(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[usize] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    /// Load functional `int f.phi + int g.phi` on every velocity unknown,
    /// prescribed ones included, indexed like node unknowns.
    pub fn load(&self) -> &[f64] {
        &self.load
    }

    pub fn gauge(&self) -> PressureGauge {
        self.gauge
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn anisotropy(&self) -> AnisotropyParameter {
        self.anisotropy
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Robin coefficient of every natural tag.
    pub fn robin_coefficients(&self) -> &[(BoundaryTag, f64)] {
        &self.robin
    }

    /// Stored entry `(row, col)`, zero outside the pattern.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let rows = &self.row_idx[self.col_ptr[col]..self.col_ptr[col + 1]];
        match rows.binary_search(&row) {
            Ok(k) => self.values[self.col_ptr[col] + k],
            Err(_) => 0.0,
        }
    }

    /// `y = K x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.size()];
        for (col, &xc) in x.iter().enumerate() {
            if xc == 0.0 {
                continue;
            }
            for k in self.col_ptr[col]..self.col_ptr[col + 1] {
                y[self.row_idx[k]] += self.values[k] * xc;
            }
        }
        y
    }

    /// Largest `|K_rc - K_cr|` over the pattern.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for col in 0..self.size() {
            for k in self.col_ptr[col]..self.col_ptr[col + 1] {
                let row = self.row_idx[k];
                worst = worst.max((self.values[k] - self.entry(col, row)).abs());
            }
        }
        worst
    }
}

fn condition<'a>(bc: &'a BoundaryConditionSpec, tag: BoundaryTag) -> Option<&'a BoundaryCondition> {
    match tag {
        BoundaryTag::Exterior => Some(&bc.exterior),
        BoundaryTag::Obstacle => Some(&bc.obstacle),
        BoundaryTag::Top => Some(&bc.top),
        BoundaryTag::Bottom => Some(&bc.bottom),
        BoundaryTag::Periodic(_) => None,
    }
}

fn validate(
    mesh: &Mesh,
    bc: &BoundaryConditionSpec,
    params: &StokesParameters,
) -> Result<(), StokesError> {
    if !(params.mu > 0.0 && params.mu.is_finite()) {
        return Err(StokesError::InvalidParameter(format!("viscosity {}", params.mu)));
    }
    if !(params.delta >= 0.0 && params.delta.is_finite()) {
        return Err(StokesError::InvalidParameter(format!("stabilization {}", params.delta)));
    }
    for tag in [
        BoundaryTag::Exterior,
        BoundaryTag::Obstacle,
        BoundaryTag::Top,
        BoundaryTag::Bottom,
    ] {
        let cond = condition(bc, tag).expect("non-periodic tag");
        if let BoundaryCondition::NaturalRobin { coefficient, .. } = cond {
            if !(*coefficient >= 0.0 && coefficient.is_finite()) {
                return Err(StokesError::InvalidParameter(format!(
                    "Robin coefficient {coefficient} on {tag:?}"
                )));
            }
        }
        if mesh.has_tag(tag) && matches!(cond, BoundaryCondition::Periodic) {
            return Err(StokesError::InconsistentTags(tag));
        }
    }
    Ok(())
}

/// Local dense element matrix of `[A B^T; B -S]`, identical for every element.
fn element_matrix(em: &ElementMatrices, params: &StokesParameters) -> Vec<f64> {
    let dim = em.dim;
    let n = em.n;
    let k = dim + 1;
    let size = n * k;
    let mut out = vec![0.0; size * size];
    let scale: Vec<f64> = (0..dim).map(|j| params.anisotropy.axis_scale(j)).collect();
    for a in 0..n {
        for b in 0..n {
            let ab = a * n + b;
            let visc: f64 = (0..dim).map(|j| scale[j] * scale[j] * em.stiff[j][ab]).sum();
            for i in 0..dim {
                out[(a * k + i) * size + b * k + i] = params.mu * visc;
                // row (a, i) velocity test, column (b, p): -int p_b div_eps phi
                out[(a * k + i) * size + b * k + dim] = -scale[i] * em.mixed[i][b * n + a];
                out[(a * k + dim) * size + b * k + i] = -scale[i] * em.mixed[i][a * n + b];
            }
            let stab: f64 = (0..dim)
                .map(|j| em.spacing[j] * em.spacing[j] * em.stiff[j][ab])
                .sum();
            out[(a * k + dim) * size + b * k + dim] = -params.delta / params.mu * stab;
        }
    }
    out
}

/// Assembles the weak form
/// `mu int D_eps u : D_eps phi - int p div_eps phi + sum_tags c int u.phi
///  = int f.phi + sum_tags int g.phi`,
/// `-int psi div_eps u - s(p, psi) = 0`.
pub fn assemble_system(
    mesh: Arc<Mesh>,
    bc: &BoundaryConditionSpec,
    params: &StokesParameters,
) -> Result<SaddleSystem, StokesError> {
    validate(&mesh, bc, params)?;
    let dim = mesh.dim();
    let k = dim + 1;
    let nodes = mesh.node_count();
    let em = ElementMatrices::new(dim, mesh.spacing());
    let n_local = em.n;

    // prescribed velocities; a Dirichlet node wins over any natural tag
    let mut prescribed_flag = vec![false; nodes * k];
    let mut prescribed = vec![0.0; nodes * k];
    for f in mesh.facets() {
        if let Some(BoundaryCondition::Dirichlet(v)) = condition(bc, f.tag) {
            for node in mesh.facet_nodes(f) {
                for i in 0..dim {
                    prescribed_flag[node * k + i] = true;
                    prescribed[node * k + i] = v[i];
                }
            }
        }
    }
    let mut free = vec![NOT_FREE; nodes * k];
    let mut free_count = 0usize;
    for (slot, flag) in free.iter_mut().zip(&prescribed_flag) {
        if !flag {
            *slot = free_count as u32;
            free_count += 1;
        }
    }

    // constants are in the pressure kernel iff B^T 1 vanishes on free velocities
    let scale: Vec<f64> = (0..dim).map(|j| params.anisotropy.axis_scale(j)).collect();
    let mut bt_one = vec![0.0; nodes * k];
    let mut b_size: f64 = 0.0;
    for e in mesh.fluid_elements() {
        let en = mesh.element_nodes(e);
        for a in 0..n_local {
            for i in 0..dim {
                let s: f64 = (0..n_local).map(|b| em.mixed[i][b * n_local + a]).sum();
                bt_one[en[a] * k + i] -= scale[i] * s;
                b_size = b_size.max((scale[i] * em.mixed[i][a]).abs());
            }
        }
    }
    let kernel = (0..nodes * k)
        .filter(|&d| d % k != dim && free[d] != NOT_FREE)
        .all(|d| bt_one[d].abs() <= 1e-10 * b_size);
    let gauge = if kernel {
        PressureGauge::MeanZeroMultiplier
    } else {
        PressureGauge::Determined
    };
    let multiplier = kernel.then_some(free_count);
    let size = free_count + usize::from(kernel);

    // node adjacency
    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); nodes];
    for e in mesh.fluid_elements() {
        let en = mesh.element_nodes(e);
        for a in 0..n_local {
            for b in 0..n_local {
                adjacency[en[a]].push(en[b] as u32);
            }
        }
    }
    for list in adjacency.iter_mut() {
        list.sort_unstable();
        list.dedup();
    }

    // compressed columns, rows ascending
    let mut col_ptr = Vec::with_capacity(size + 1);
    let mut row_idx = Vec::new();
    col_ptr.push(0);
    for node in 0..nodes {
        for c in 0..k {
            if free[node * k + c] == NOT_FREE {
                continue;
            }
            for &m in &adjacency[node] {
                let m = m as usize;
                for r in 0..k {
                    let couples = if c == dim { true } else { r == c || r == dim };
                    if couples && free[m * k + r] != NOT_FREE {
                        row_idx.push(free[m * k + r] as usize);
                    }
                }
            }
            if c == dim {
                if let Some(mult) = multiplier {
                    row_idx.push(mult);
                }
            }
            col_ptr.push(row_idx.len());
        }
    }
    if multiplier.is_some() {
        for node in 0..nodes {
            row_idx.push(free[node * k + dim] as usize);
        }
        col_ptr.push(row_idx.len());
    }
    drop(adjacency);
    let mut values = vec![0.0; row_idx.len()];
    let mut rhs = vec![0.0; size];
    let mut load = vec![0.0; nodes * k];

    let position = |col: usize, row: usize| -> usize {
        let lo = col_ptr[col];
        let rows = &row_idx[lo..col_ptr[col + 1]];
        lo + rows.binary_search(&row).expect("entry in pattern")
    };

    let ke = element_matrix(&em, params);
    let local = n_local * k;
    let f_nodal: Vec<[f64; 3]> = (0..nodes)
        .map(|node| params.forcing.at(mesh.node_position(node)))
        .collect();
    for e in mesh.fluid_elements() {
        let en = mesh.element_nodes(e);
        for lc in 0..local {
            let (b, c) = (lc / k, lc % k);
            let gc = en[b] * k + c;
            let col = free[gc];
            for lr in 0..local {
                let v = ke[lr * local + lc];
                if v == 0.0 {
                    continue;
                }
                let (a, r) = (lr / k, lr % k);
                let row = free[en[a] * k + r];
                if row == NOT_FREE {
                    continue;
                }
                if col == NOT_FREE {
                    rhs[row as usize] -= v * prescribed[gc];
                } else {
                    values[position(col as usize, row as usize)] += v;
                }
            }
        }
        for a in 0..n_local {
            for b in 0..n_local {
                let m = em.mass[a * n_local + b];
                for i in 0..dim {
                    load[en[a] * k + i] += m * f_nodal[en[b]][i];
                }
            }
        }
        if let Some(mult) = multiplier {
            for a in 0..n_local {
                let row = free[en[a] * k + dim] as usize;
                values[position(mult, row)] += em.load[a];
                values[position(row, mult)] += em.load[a];
            }
        }
    }

    let mut robin = Vec::new();
    for tag in [
        BoundaryTag::Exterior,
        BoundaryTag::Obstacle,
        BoundaryTag::Top,
        BoundaryTag::Bottom,
    ] {
        let Some(BoundaryCondition::NaturalRobin {
            coefficient,
            forcing,
        }) = condition(bc, tag)
        else {
            continue;
        };
        robin.push((tag, *coefficient));
        for (_, f) in mesh.facets_with_tag(tag) {
            let corners = mesh.facet_local_corners(f);
            let en = mesh.element_nodes(f.element);
            if *coefficient != 0.0 {
                for &a in &corners {
                    for &b in &corners {
                        let m = coefficient * em.facet_mass(f.axis, a, b);
                        for i in 0..dim {
                            let gc = en[b] * k + i;
                            let row = free[en[a] * k + i];
                            if row == NOT_FREE {
                                continue;
                            }
                            let col = free[gc];
                            if col == NOT_FREE {
                                rhs[row as usize] -= m * prescribed[gc];
                            } else {
                                values[position(col as usize, row as usize)] += m;
                            }
                        }
                    }
                }
            }
            let centre = mesh.facet_center(f);
            let (_, y) = mesh.micro_coordinate([centre[0], centre[1]]);
            let g = forcing.evaluate(f, y);
            let w = em.facet_load(f.axis);
            for &a in &corners {
                for i in 0..dim.min(2) {
                    load[en[a] * k + i] += w * g[i];
                }
            }
        }
    }

    for node in 0..nodes {
        for i in 0..dim {
            let d = node * k + i;
            if free[d] != NOT_FREE {
                rhs[free[d] as usize] += load[d];
            }
        }
    }

    Ok(SaddleSystem {
        mesh,
        dofs: DofMap {
            components: k,
            free,
            prescribed,
            free_count,
            multiplier,
        },
        col_ptr,
        row_idx,
        values,
        rhs,
        load,
        gauge,
        mu: params.mu,
        anisotropy: params.anisotropy,
        delta: params.delta,
        robin,
    })
}
