//! Periodic unfolding of fields on the perforated layer.
//!
//! On a conforming mesh (`h = eps / m`) every lattice cell is a translated and
//! scaled copy of the reference cell mesh, so unfolding is an exact relabeling
//! of nodal values: `v_hat(x', y) = v(eps kappa(x'/eps) + eps y', y3)`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::discretization::{FacetField, Field, Mesh, Side, Sum};
use crate::geometry::BoundaryTag;

/// Relative tolerance of the unfolding identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnfoldError {
    #[error("mesh does not unfold onto the reference cell: {0}")]
    NonconformingUnfold(String),
    #[error("averaging region is empty")]
    EmptyRegion,
    #[error("cell data does not match the unfolding: {0}")]
    Mismatch(String),
}

/// Index maps from the reference cell mesh to every lattice cell of a
/// perforated-layer mesh.
#[derive(Debug, Clone)]
pub struct UnfoldingMap {
    fine: Arc<Mesh>,
    reference: Arc<Mesh>,
    epsilon: f64,
    cell_counts: [usize; 2],
    /// `nodes[k * r + i]`: fine node of reference node `i` in cell `k`.
    nodes: Vec<u32>,
    /// Obstacle facets of the reference mesh (indices into its facet list).
    reference_facets: Vec<usize>,
    /// `facets[k * f + j]`: fine facet of reference obstacle facet `j` in cell `k`.
    facets: Vec<u32>,
}

impl UnfoldingMap {
    /// Builds the maps for a perforated-layer mesh.
    pub fn new(fine: Arc<Mesh>) -> Result<UnfoldingMap, UnfoldError> {
        let lattice = *fine
            .lattice()
            .ok_or_else(|| UnfoldError::NonconformingUnfold("mesh has no lattice".into()))?;
        if fine.dim() != 3 {
            return Err(UnfoldError::NonconformingUnfold("mesh is not 3D".into()));
        }
        let m = lattice.subdivisions;
        let layers = fine.cells()[2];
        let [n1, n2] = lattice.cell_counts;
        if fine.cells()[0] != n1 * m || fine.cells()[1] != n2 * m {
            return Err(UnfoldError::NonconformingUnfold(
                "grid does not tile the lattice".into(),
            ));
        }
        let cell = crate::geometry::build_unit_cell(fine.shape())
            .map_err(|e| UnfoldError::NonconformingUnfold(e.to_string()))?;
        let reference = Mesh::unit_cell(&cell, 1.0 / m as f64, Some(layers), false)
            .map_err(|e| UnfoldError::NonconformingUnfold(e.to_string()))?;
        let reference = Arc::new(reference);

        let r = reference.node_count();
        let cells = n1 * n2;
        let mut nodes = Vec::with_capacity(cells * r);
        for k2 in 0..n2 {
            for k1 in 0..n1 {
                for i in 0..r {
                    let [a, b, c] = reference.grid_coords(reference.grid_of_node(i));
                    let node = fine.node_at([k1 * m + a, k2 * m + b, c]).ok_or_else(|| {
                        UnfoldError::NonconformingUnfold(format!(
                            "reference node {i} has no fine node in cell ({k1}, {k2})"
                        ))
                    })?;
                    nodes.push(node as u32);
                }
            }
        }

        let reference_facets: Vec<usize> = reference
            .facets_with_tag(BoundaryTag::Obstacle)
            .map(|(i, _)| i)
            .collect();
        let slot: HashMap<([usize; 3], usize, Side), usize> = reference_facets
            .iter()
            .enumerate()
            .map(|(j, &fi)| {
                let f = &reference.facets()[fi];
                ((f.element, f.axis, f.side), j)
            })
            .collect();
        let per_cell = reference_facets.len();
        let mut facets = vec![u32::MAX; cells * per_cell];
        for (fi, f) in fine.facets_with_tag(BoundaryTag::Obstacle) {
            let (k1, k2) = (f.element[0] / m, f.element[1] / m);
            let local = [f.element[0] - k1 * m, f.element[1] - k2 * m, f.element[2]];
            let j = *slot.get(&(local, f.axis, f.side)).ok_or_else(|| {
                UnfoldError::NonconformingUnfold(format!("fine obstacle facet {fi} has no reference image"))
            })?;
            let k = k1 + n1 * k2;
            if f.obstacle != Some(k as u32) {
                return Err(UnfoldError::NonconformingUnfold(format!(
                    "facet {fi} bounds obstacle {:?}, expected {k}",
                    f.obstacle
                )));
            }
            facets[k * per_cell + j] = fi as u32;
        }
        if facets.iter().any(|&f| f == u32::MAX) {
            return Err(UnfoldError::NonconformingUnfold(
                "a reference obstacle facet is missing in some cell".into(),
            ));
        }

        Ok(UnfoldingMap {
            fine,
            reference,
            epsilon: lattice.epsilon,
            cell_counts: lattice.cell_counts,
            nodes,
            reference_facets,
            facets,
        })
    }

    pub fn fine_mesh(&self) -> &Arc<Mesh> {
        &self.fine
    }

    /// Mesh of `Y_f = Y'_f x (0,1)` every micro field lives on.
    pub fn reference_mesh(&self) -> &Arc<Mesh> {
        &self.reference
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn cell_counts(&self) -> [usize; 2] {
        self.cell_counts
    }

    /// Number of macro cells.
    pub fn cell_count(&self) -> usize {
        self.cell_counts[0] * self.cell_counts[1]
    }

    /// Linear index of macro cell `k'`.
    pub fn cell_index(&self, k: [usize; 2]) -> usize {
        k[0] + self.cell_counts[0] * k[1]
    }

    /// Fine nodes of macro cell `k`, in reference node order.
    pub fn cell_nodes(&self, k: usize) -> &[u32] {
        let r = self.reference.node_count();
        &self.nodes[k * r..(k + 1) * r]
    }

    /// Fine obstacle facets of macro cell `k`, in reference facet order.
    pub fn cell_facets(&self, k: usize) -> &[u32] {
        let f = self.reference_facets.len();
        &self.facets[k * f..(k + 1) * f]
    }

    pub fn reference_facets(&self) -> &[usize] {
        &self.reference_facets
    }

    fn check_mesh(&self, mesh: &Arc<Mesh>) -> Result<(), UnfoldError> {
        if Arc::ptr_eq(mesh, &self.fine) || **mesh == *self.fine {
            Ok(())
        } else {
            Err(UnfoldError::Mismatch("field lives on another mesh".into()))
        }
    }

    /// Unfolds a nodal field.
    pub fn unfold<'a>(&'a self, v: &'a Field) -> Result<UnfoldedField<'a>, UnfoldError> {
        self.check_mesh(v.mesh())?;
        Ok(UnfoldedField { map: self, source: v })
    }

    /// Unfolds obstacle-wall data onto `omega x dT`.
    pub fn unfold_boundary<'a>(
        &'a self,
        trace: &'a FacetField,
    ) -> Result<UnfoldedBoundary<'a>, UnfoldError> {
        self.check_mesh(trace.mesh())?;
        if trace.tag() != BoundaryTag::Obstacle {
            return Err(UnfoldError::Mismatch(format!(
                "boundary unfolding needs obstacle data, got {:?}",
                trace.tag()
            )));
        }
        let mut slot = vec![u32::MAX; self.fine.facets().len()];
        for (i, &fi) in trace.facets().iter().enumerate() {
            slot[fi] = i as u32;
        }
        let mut positions = Vec::with_capacity(self.facets.len());
        for &fi in &self.facets {
            let s = slot[fi as usize];
            if s == u32::MAX {
                return Err(UnfoldError::Mismatch(format!("facet {fi} has no data")));
            }
            positions.push(s);
        }
        Ok(UnfoldedBoundary {
            map: self,
            source: trace,
            positions,
        })
    }

    /// Rebuilds the fine field from one micro field per macro cell. Nodes shared
    /// by neighbouring cells must receive identical values.
    pub fn fold(&self, cells: &[Field]) -> Result<Field, UnfoldError> {
        if cells.len() != self.cell_count() {
            return Err(UnfoldError::Mismatch(format!(
                "{} cell fields for {} cells",
                cells.len(),
                self.cell_count()
            )));
        }
        let k = cells.first().map_or(1, Field::components);
        let n = self.fine.node_count();
        let mut values = vec![0.0; n * k];
        let mut seen = vec![false; n];
        for (c, micro) in cells.iter().enumerate() {
            if micro.components() != k || **micro.mesh() != *self.reference {
                return Err(UnfoldError::Mismatch(format!("cell {c} is not on the reference mesh")));
            }
            for (i, &node) in self.cell_nodes(c).iter().enumerate() {
                let node = node as usize;
                let src = micro.node_values(i);
                let dst = &mut values[node * k..(node + 1) * k];
                if seen[node] {
                    if dst != src {
                        return Err(UnfoldError::Mismatch(format!(
                            "cells disagree at fine node {node}"
                        )));
                    }
                } else {
                    dst.copy_from_slice(src);
                    seen[node] = true;
                }
            }
        }
        if let Some(node) = seen.iter().position(|s| !s) {
            return Err(UnfoldError::Mismatch(format!("fine node {node} is in no cell")));
        }
        Ok(Field::from_values(self.fine.clone(), k, values))
    }
}

/// `v_hat` of a nodal field: a view holding the source and the index maps.
#[derive(Debug, Clone, Copy)]
pub struct UnfoldedField<'a> {
    map: &'a UnfoldingMap,
    source: &'a Field,
}

impl<'a> UnfoldedField<'a> {
    pub fn map(&self) -> &'a UnfoldingMap {
        self.map
    }

    pub fn epsilon(&self) -> f64 {
        self.map.epsilon
    }

    pub fn cell_count(&self) -> usize {
        self.map.cell_count()
    }

    /// Value of component `c` at reference node `i` of macro cell `k`.
    pub fn value(&self, k: usize, i: usize, c: usize) -> f64 {
        self.source.value(self.map.cell_nodes(k)[i] as usize, c)
    }

    /// The micro field `y -> v_hat(x', y)` of macro cell `k`.
    pub fn micro_field(&self, k: usize) -> Field {
        let comps = self.source.components();
        let values = self
            .map
            .cell_nodes(k)
            .iter()
            .flat_map(|&n| self.source.node_values(n as usize).iter().copied())
            .collect();
        Field::from_values(self.map.reference.clone(), comps, values)
    }

    pub fn micro_fields(&self) -> Vec<Field> {
        (0..self.cell_count()).map(|k| self.micro_field(k)).collect()
    }

    fn cell_area(&self) -> f64 {
        self.map.epsilon * self.map.epsilon
    }

    /// `||v_hat||_{L^p(omega x Y_f)}`: `v_hat` is constant in `x'` on every
    /// cell of area `eps^2`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let mut total = Sum::default();
        for k in 0..self.cell_count() {
            total += self.micro_field(k).lp_norm(p).powf(p);
        }
        let total = total.value();
        (self.cell_area() * total).powf(1.0 / p)
    }

    /// `||D_y v_hat||_{L^p(omega x Y_f)}`.
    pub fn micro_gradient_norm(&self, p: f64) -> f64 {
        let mut total = Sum::default();
        for k in 0..self.cell_count() {
            total += self.micro_field(k).d_eps_lp_norm(1.0, p).powf(p);
        }
        let total = total.value();
        (self.cell_area() * total).powf(1.0 / p)
    }

    /// `M_{Y_f}[v_hat(x', .)]` for macro cell `k`.
    pub fn cell_average(&self, k: usize) -> Vec<f64> {
        self.micro_field(k).mean()
    }
}

/// `g_hat^b` of obstacle-wall data.
#[derive(Debug, Clone)]
pub struct UnfoldedBoundary<'a> {
    map: &'a UnfoldingMap,
    source: &'a FacetField,
    /// Slot in `source` of every `(cell, reference facet)`.
    positions: Vec<u32>,
}

impl<'a> UnfoldedBoundary<'a> {
    pub fn map(&self) -> &'a UnfoldingMap {
        self.map
    }

    pub fn epsilon(&self) -> f64 {
        self.map.epsilon
    }

    pub fn cell_count(&self) -> usize {
        self.map.cell_count()
    }

    /// Micro data on `dT = dT' x (0,1)` of macro cell `k`.
    pub fn micro_field(&self, k: usize) -> FacetField {
        let per_cell = self.map.reference_facets.len();
        let mut values = Vec::with_capacity(per_cell * self.source.corners() * self.source.components());
        for &s in &self.positions[k * per_cell..(k + 1) * per_cell] {
            values.extend_from_slice(self.source.facet_values(s as usize));
        }
        FacetField::from_parts(
            self.map.reference.clone(),
            BoundaryTag::Obstacle,
            self.map.reference_facets.clone(),
            self.source.components(),
            values,
        )
    }

    /// `||g_hat^b||_{L^p(omega x dT)}`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let area = self.map.epsilon * self.map.epsilon;
        let mut total = Sum::default();
        for k in 0..self.cell_count() {
            total += self.micro_field(k).lp_norm(p).powf(p);
        }
        let total = total.value();
        (area * total).powf(1.0 / p)
    }

    /// `M_{dT}[g_hat^b(x', .)]` for macro cell `k`.
    pub fn cell_average(&self, k: usize) -> Vec<f64> {
        self.micro_field(k).mean()
    }
}

/// Part of the fluid region to average over.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    /// The whole fluid region of the mesh.
    Fluid,
    /// Fluid part of one lattice cell `eps (k' + Y') x (0,1)`.
    LatticeCell([usize; 2]),
    /// Explicit fluid elements.
    Elements(Vec<[usize; 3]>),
}

fn lattice_cell_elements(mesh: &Mesh, k: [usize; 2]) -> Result<Vec<[usize; 3]>, UnfoldError> {
    let lattice = mesh.lattice().ok_or(UnfoldError::EmptyRegion)?;
    if k[0] >= lattice.cell_counts[0] || k[1] >= lattice.cell_counts[1] {
        return Err(UnfoldError::EmptyRegion);
    }
    let m = lattice.subdivisions;
    Ok(mesh
        .fluid_elements()
        .filter(|e| e[0] / m == k[0] && e[1] / m == k[1])
        .collect())
}

/// Mean of `v` over a region (exact for multilinear fields), per component.
pub fn region_average(v: &Field, region: &Region) -> Result<Vec<f64>, UnfoldError> {
    let mesh = v.mesh();
    let elements = match region {
        Region::Fluid => mesh.fluid_elements().collect(),
        Region::LatticeCell(k) => lattice_cell_elements(mesh, *k)?,
        Region::Elements(list) => {
            for e in list {
                let valid = (0..3).all(|d| e[d] < mesh.cells()[d].max(1))
                    && !mesh.is_solid_column(e[0], e[1]);
                if !valid {
                    return Err(UnfoldError::Mismatch(format!("{e:?} is not a fluid element")));
                }
            }
            list.clone()
        }
    };
    if elements.is_empty() {
        return Err(UnfoldError::EmptyRegion);
    }
    let em = crate::discretization::ElementMatrices::new(mesh.dim(), mesh.spacing());
    let k = v.components();
    let mut total = vec![0.0; k];
    for e in &elements {
        let nodes = mesh.element_nodes(*e);
        for a in 0..em.n {
            for (c, t) in total.iter_mut().enumerate() {
                *t += em.load[a] * v.value(nodes[a], c);
            }
        }
    }
    let measure = elements.len() as f64 * mesh.element_volume();
    Ok(total.into_iter().map(|t| t / measure).collect())
}

/// Part of the obstacle walls to average over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryRegion {
    /// Every facet carried by the data.
    All,
    /// Walls of one obstacle (lattice cell order).
    Obstacle(u32),
}

/// Mean of facet data over (part of) its boundary, per component.
pub fn boundary_average(g: &FacetField, boundary: BoundaryRegion) -> Result<Vec<f64>, UnfoldError> {
    let mesh = g.mesh();
    let em = crate::discretization::ElementMatrices::new(mesh.dim(), mesh.spacing());
    let k = g.components();
    let mut total = vec![0.0; k];
    let mut measure = 0.0;
    for (i, &fi) in g.facets().iter().enumerate() {
        let f = &mesh.facets()[fi];
        if let BoundaryRegion::Obstacle(o) = boundary {
            if f.obstacle != Some(o) {
                continue;
            }
        }
        measure += mesh.facet_measure(f);
        let w = em.facet_load(f.axis);
        let vals = g.facet_values(i);
        for a in 0..g.corners() {
            for (c, t) in total.iter_mut().enumerate() {
                *t += w * vals[a * k + c];
            }
        }
    }
    if measure == 0.0 {
        return Err(UnfoldError::EmptyRegion);
    }
    Ok(total.into_iter().map(|t| t / measure).collect())
}

/// Which norm identity a check evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Identity {
    /// `||v_hat||_{L^p(omega x Y_f)} = ||v||_{L^p}`.
    Volume,
    /// `||D_y v_hat||_{L^p} = eps ||D_eps v||_{L^p}`.
    Gradient,
    /// `||g_hat^b||_{L^p(omega x dT)} = eps^{1/p} ||g||_{L^p(dT_eps)}`.
    Boundary,
}

impl Identity {
    pub fn name(&self) -> &'static str {
        match self {
            Identity::Volume => "volume",
            Identity::Gradient => "gradient",
            Identity::Boundary => "boundary",
        }
    }
}

impl fmt::Display for Identity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub identity: Identity,
    pub p: f64,
    /// Norm of the unfolded object.
    pub unfolded: f64,
    /// The fine-domain norm times the predicted constant.
    pub predicted: f64,
}

impl IdentityCheck {
    pub fn discrepancy(&self) -> f64 {
        let diff = (self.unfolded - self.predicted).abs();
        let scale = self.unfolded.abs().max(self.predicted.abs());
        if scale == 0.0 {
            0.0
        } else {
            diff / scale
        }
    }

    pub fn passed(&self) -> bool {
        self.discrepancy() <= IDENTITY_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldingReport {
    pub epsilon: f64,
    pub checks: Vec<IdentityCheck>,
}

impl UnfoldingReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(IdentityCheck::passed)
    }

    pub fn worst(&self) -> f64 {
        self.checks.iter().fold(0.0, |m, c| m.max(c.discrepancy()))
    }

    /// Rows `identity,epsilon,p,discrepancy`.
    pub fn csv_rows(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| format!("{},{},{},{:e}", c.identity, self.epsilon, c.p, c.discrepancy()))
            .collect()
    }
}

pub const CSV_HEADER: &str = "identity,epsilon,p,discrepancy";

/// Evaluates the three norm identities for `p` in `exponents` on a field and
/// its obstacle trace. The boundary identity is skipped without obstacles.
pub fn verify_unfolding_identities(
    map: &UnfoldingMap,
    v: &Field,
    exponents: &[f64],
) -> Result<UnfoldingReport, UnfoldError> {
    let eps = map.epsilon;
    let unfolded = map.unfold(v)?;
    let has_walls = !map.reference_facets.is_empty();
    let trace = has_walls.then(|| FacetField::trace(v, BoundaryTag::Obstacle));
    let boundary = match &trace {
        Some(t) => Some(map.unfold_boundary(t)?),
        None => None,
    };
    let mut checks = Vec::new();
    for &p in exponents {
        checks.push(IdentityCheck {
            identity: Identity::Volume,
            p,
            unfolded: unfolded.lp_norm(p),
            predicted: v.lp_norm(p),
        });
        checks.push(IdentityCheck {
            identity: Identity::Gradient,
            p,
            unfolded: unfolded.micro_gradient_norm(p),
            predicted: eps * v.d_eps_lp_norm(eps, p),
        });
        if let (Some(b), Some(t)) = (&boundary, &trace) {
            checks.push(IdentityCheck {
                identity: Identity::Boundary,
                p,
                unfolded: b.lp_norm(p),
                predicted: eps.powf(1.0 / p) * t.lp_norm(p),
            });
        }
    }
    Ok(UnfoldingReport {
        epsilon: eps,
        checks,
    })
}

/// Boundary identity alone, for surface data `g` on the obstacle walls.
pub fn verify_boundary_identity(
    map: &UnfoldingMap,
    g: &FacetField,
    exponents: &[f64],
) -> Result<UnfoldingReport, UnfoldError> {
    let eps = map.epsilon;
    let unfolded = map.unfold_boundary(g)?;
    let checks = exponents
        .iter()
        .map(|&p| IdentityCheck {
            identity: Identity::Boundary,
            p,
            unfolded: unfolded.lp_norm(p),
            predicted: eps.powf(1.0 / p) * g.lp_norm(p),
        })
        .collect();
    Ok(UnfoldingReport {
        epsilon: eps,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_perforated_domain, build_unit_cell, ObstacleShape, Rect};

    fn layer(epsilon: f64, m: usize, shape: ObstacleShape) -> Arc<Mesh> {
        let cell = build_unit_cell(shape).unwrap();
        let d = build_perforated_domain(epsilon, cell, Rect::UNIT_SQUARE).unwrap();
        Arc::new(Mesh::perforated(&d, epsilon / m as f64, 2).unwrap())
    }

    #[test]
    fn macro_cell_count() {
        let map = UnfoldingMap::new(layer(0.25, 4, ObstacleShape::square(0.5))).unwrap();
        assert_eq!(map.cell_count(), 16);
        assert_eq!(map.reference_mesh().cells(), [4, 4, 2]);
    }

    #[test]
    fn constant_unfolds_to_constant() {
        let mesh = layer(0.5, 4, ObstacleShape::square(0.5));
        let map = UnfoldingMap::new(mesh.clone()).unwrap();
        let one = Field::constant(mesh, &[1.0]);
        let u = map.unfold(&one).unwrap();
        for k in 0..u.cell_count() {
            assert!(u.micro_field(k).values().iter().all(|v| *v == 1.0));
        }
        let report = verify_unfolding_identities(&map, &one, &[1.0, 2.0]).unwrap();
        assert!(report.checks.iter().all(|c| c.discrepancy() < 1e-15));
    }

    #[test]
    fn lattice_free_mesh_is_rejected() {
        let cell = build_unit_cell(ObstacleShape::None).unwrap();
        let mesh = Arc::new(Mesh::unit_cell(&cell, 0.25, Some(2), false).unwrap());
        assert!(matches!(
            UnfoldingMap::new(mesh),
            Err(UnfoldError::NonconformingUnfold(_))
        ));
    }

    #[test]
    fn empty_regions() {
        let mesh = layer(0.5, 4, ObstacleShape::square(0.5));
        let v = Field::constant(mesh.clone(), &[2.0]);
        assert_eq!(
            region_average(&v, &Region::Elements(vec![])),
            Err(UnfoldError::EmptyRegion)
        );
        assert_eq!(
            region_average(&v, &Region::LatticeCell([5, 0])),
            Err(UnfoldError::EmptyRegion)
        );
        let g = FacetField::trace(&v, BoundaryTag::Obstacle);
        assert_eq!(
            boundary_average(&g, BoundaryRegion::Obstacle(99)),
            Err(UnfoldError::EmptyRegion)
        );
        let empty = layer(0.5, 4, ObstacleShape::None);
        let w = Field::constant(empty, &[1.0]);
        let none = FacetField::trace(&w, BoundaryTag::Obstacle);
        assert_eq!(boundary_average(&none, BoundaryRegion::All), Err(UnfoldError::EmptyRegion));
    }
}
