//! Nodal fields on structured meshes, their traces on tagged facets, and the
//! integrals and norms used throughout.

use std::sync::Arc;

use super::element::{gauss_rule, shape_derivatives, shape_values, ElementMatrices, Sum};
use super::mesh::{Facet, Mesh};
use crate::geometry::BoundaryTag;

/// Continuous multilinear field, `components` values per active node.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    mesh: Arc<Mesh>,
    components: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(mesh: Arc<Mesh>, components: usize) -> Field {
        let values = vec![0.0; mesh.node_count() * components];
        Field {
            mesh,
            components,
            values,
        }
    }

    pub fn from_values(mesh: Arc<Mesh>, components: usize, values: Vec<f64>) -> Field {
        assert_eq!(values.len(), mesh.node_count() * components);
        Field {
            mesh,
            components,
            values,
        }
    }

    pub fn constant(mesh: Arc<Mesh>, value: &[f64]) -> Field {
        let n = mesh.node_count();
        let values = (0..n).flat_map(|_| value.iter().copied()).collect();
        Field::from_values(mesh, value.len(), values)
    }

    pub fn scalar_from_fn(mesh: Arc<Mesh>, f: impl Fn([f64; 3]) -> f64) -> Field {
        let values = (0..mesh.node_count()).map(|n| f(mesh.node_position(n))).collect();
        Field::from_values(mesh, 1, values)
    }

    /// Vector field with one component per mesh dimension.
    pub fn vector_from_fn(mesh: Arc<Mesh>, f: impl Fn([f64; 3]) -> [f64; 3]) -> Field {
        let dim = mesh.dim();
        let mut values = Vec::with_capacity(mesh.node_count() * dim);
        for n in 0..mesh.node_count() {
            values.extend_from_slice(&f(mesh.node_position(n))[..dim]);
        }
        Field::from_values(mesh, dim, values)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn value(&self, node: usize, component: usize) -> f64 {
        self.values[node * self.components + component]
    }

    pub fn node_values(&self, node: usize) -> &[f64] {
        &self.values[node * self.components..(node + 1) * self.components]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, c: f64) -> Field {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// `self + c other` on the same mesh.
    pub fn axpy(&self, c: f64, other: &Field) -> Field {
        assert!(Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh);
        assert_eq!(self.components, other.components);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + c * b)
            .collect();
        Field::from_values(self.mesh.clone(), self.components, values)
    }

    pub fn component(&self, c: usize) -> Field {
        let values = self.values.iter().skip(c).step_by(self.components).copied().collect();
        Field::from_values(self.mesh.clone(), 1, values)
    }

    /// Subtracts a constant from every node of a scalar field.
    pub fn shifted(&self, shift: f64) -> Field {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v -= shift);
        out
    }

    /// Maximum absolute nodal value.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn element_matrices(&self) -> ElementMatrices {
        ElementMatrices::new(self.mesh.dim(), self.mesh.spacing())
    }

    fn corner_values(&self, e: [usize; 3], out: &mut [f64]) {
        let nodes = self.mesh.element_nodes(e);
        let k = self.components;
        for a in 0..self.mesh.local_node_count() {
            out[a * k..(a + 1) * k].copy_from_slice(self.node_values(nodes[a]));
        }
    }

    /// `int v` over the fluid region, per component (exact).
    pub fn integrate(&self) -> Vec<f64> {
        integrate_elements(self, self.mesh.fluid_elements())
    }

    /// Mean over the fluid region, per component.
    pub fn mean(&self) -> Vec<f64> {
        let vol = self.mesh.fluid_volume();
        self.integrate().into_iter().map(|v| v / vol).collect()
    }

    /// `||v||_{L^2}` over the fluid region (exact for multilinear fields).
    pub fn l2_norm(&self) -> f64 {
        l2_squared(self, self.mesh.fluid_elements()).sqrt()
    }

    /// `||v||_{L^p}` with the Euclidean norm of the nodal vector; `p = 2` is exact,
    /// other `p` use a 3-point tensor Gauss rule.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p == 2.0 {
            return self.l2_norm();
        }
        lp_power(self, self.mesh.fluid_elements(), p).powf(1.0 / p)
    }

    /// `||v - mean(v)||_{L^2}` for a scalar field.
    pub fn mean_adjusted_l2(&self) -> f64 {
        assert_eq!(self.components, 1);
        self.shifted(self.mean()[0]).l2_norm()
    }

    /// `||D_eps v||_{L^2}`: the full gradient with every vertical derivative
    /// scaled by `1/eps` (exact).
    pub fn d_eps_norm(&self, epsilon: f64) -> f64 {
        self.d_eps_norm_squared(epsilon).sqrt()
    }

    /// `||D_eps v||_{L^p}` with the Frobenius norm pointwise; `p = 2` is
    /// exact, other `p` use a 3-point tensor Gauss rule.
    pub fn d_eps_lp_norm(&self, epsilon: f64, p: f64) -> f64 {
        if p == 2.0 {
            return self.d_eps_norm(epsilon);
        }
        let dim = self.mesh.dim();
        let rule = gauss_rule(dim, 3);
        let vol = self.mesh.element_volume();
        let spacing = self.mesh.spacing();
        let derivs: Vec<Vec<[f64; 8]>> = rule
            .iter()
            .map(|(t, _)| (0..dim).map(|d| shape_derivatives(dim, spacing, *t, d)).collect())
            .collect();
        let n = self.mesh.local_node_count();
        let k = self.components;
        let mut local = vec![0.0; n * k];
        let mut total = Sum::default();
        for e in self.mesh.fluid_elements() {
            self.corner_values(e, &mut local);
            for ((_, w), ds) in rule.iter().zip(&derivs) {
                let mut sq = 0.0;
                for (axis, d) in ds.iter().enumerate() {
                    let s = if axis == 2 { 1.0 / epsilon } else { 1.0 };
                    for c in 0..k {
                        let g: f64 = (0..n).map(|a| d[a] * local[a * k + c]).sum();
                        sq += s * s * g * g;
                    }
                }
                total += w * vol * sq.sqrt().powf(p);
            }
        }
        total.value().powf(1.0 / p)
    }

    pub fn d_eps_norm_squared(&self, epsilon: f64) -> f64 {
        self.d_eps_inner(self, epsilon)
    }

    /// `int D_eps v : D_eps w` over the fluid region (exact).
    pub fn d_eps_inner(&self, other: &Field, epsilon: f64) -> f64 {
        let e2 = 1.0 / (epsilon * epsilon);
        self.weighted_gradient_inner(other, [1.0, 1.0, e2])
    }

    /// `sum_j weights[j] int d_j v . d_j w` over the fluid region (exact).
    pub fn weighted_gradient_inner(&self, other: &Field, weights: [f64; 3]) -> f64 {
        assert_eq!(self.components, other.components);
        let em = self.element_matrices();
        let dim = self.mesh.dim();
        let n = em.n;
        let k = self.components;
        let mut lv = vec![0.0; n * k];
        let mut lw = vec![0.0; n * k];
        let mut total = Sum::default();
        for e in self.mesh.fluid_elements() {
            self.corner_values(e, &mut lv);
            other.corner_values(e, &mut lw);
            for (axis, &weight) in weights.iter().enumerate().take(dim) {
                let s = &em.stiff[axis];
                let mut acc = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        let mut dot = 0.0;
                        for c in 0..k {
                            dot += lv[a * k + c] * lw[b * k + c];
                        }
                        acc += s[a * n + b] * dot;
                    }
                }
                total += weight * acc;
            }
        }
        total.value()
    }

    /// `int v . w` over the fluid region (exact).
    pub fn l2_inner(&self, other: &Field) -> f64 {
        assert_eq!(self.components, other.components);
        let em = self.element_matrices();
        let n = em.n;
        let k = self.components;
        let mut lv = vec![0.0; n * k];
        let mut lw = vec![0.0; n * k];
        let mut total = Sum::default();
        for e in self.mesh.fluid_elements() {
            self.corner_values(e, &mut lv);
            other.corner_values(e, &mut lw);
            for a in 0..n {
                for b in 0..n {
                    let mut dot = 0.0;
                    for c in 0..k {
                        dot += lv[a * k + c] * lw[b * k + c];
                    }
                    total += em.mass[a * n + b] * dot;
                }
            }
        }
        total.value()
    }

    /// Value at local coordinates `t` of element `e`.
    pub fn evaluate_in_element(&self, e: [usize; 3], t: [f64; 3]) -> Vec<f64> {
        let nodes = self.mesh.element_nodes(e);
        let s = shape_values(self.mesh.dim(), t);
        let mut out = vec![0.0; self.components];
        for a in 0..self.mesh.local_node_count() {
            for (c, o) in out.iter_mut().enumerate() {
                *o += s[a] * self.value(nodes[a], c);
            }
        }
        out
    }

    /// `d_axis` of every component at local coordinates `t` of element `e`.
    pub fn derivative_in_element(&self, e: [usize; 3], t: [f64; 3], axis: usize) -> Vec<f64> {
        let nodes = self.mesh.element_nodes(e);
        let ds = shape_derivatives(self.mesh.dim(), self.mesh.spacing(), t, axis);
        let mut out = vec![0.0; self.components];
        for a in 0..self.mesh.local_node_count() {
            for (c, o) in out.iter_mut().enumerate() {
                *o += ds[a] * self.value(nodes[a], c);
            }
        }
        out
    }
}

fn integrate_elements(field: &Field, elements: impl Iterator<Item = [usize; 3]>) -> Vec<f64> {
    let em = field.element_matrices();
    let k = field.components;
    let mut local = vec![0.0; em.n * k];
    let mut out = vec![Sum::default(); k];
    for e in elements {
        field.corner_values(e, &mut local);
        for a in 0..em.n {
            for c in 0..k {
                out[c] += em.load[a] * local[a * k + c];
            }
        }
    }
    out.into_iter().map(Sum::value).collect()
}

fn l2_squared(field: &Field, elements: impl Iterator<Item = [usize; 3]>) -> f64 {
    let em = field.element_matrices();
    let n = em.n;
    let k = field.components;
    let mut local = vec![0.0; n * k];
    let mut total = Sum::default();
    for e in elements {
        field.corner_values(e, &mut local);
        for a in 0..n {
            for b in 0..n {
                let mut dot = 0.0;
                for c in 0..k {
                    dot += local[a * k + c] * local[b * k + c];
                }
                total += em.mass[a * n + b] * dot;
            }
        }
    }
    total.value()
}

fn lp_power(field: &Field, elements: impl Iterator<Item = [usize; 3]>, p: f64) -> f64 {
    let dim = field.mesh.dim();
    let rule = gauss_rule(dim, 3);
    let shapes: Vec<_> = rule.iter().map(|(t, _)| shape_values(dim, *t)).collect();
    let vol = field.mesh.element_volume();
    let n = field.mesh.local_node_count();
    let k = field.components;
    let mut local = vec![0.0; n * k];
    let mut total = Sum::default();
    for e in elements {
        field.corner_values(e, &mut local);
        for ((_, w), s) in rule.iter().zip(&shapes) {
            let mut sq = 0.0;
            for c in 0..k {
                let v: f64 = (0..n).map(|a| s[a] * local[a * k + c]).sum();
                sq += v * v;
            }
            total += w * vol * sq.sqrt().powf(p);
        }
    }
    total.value()
}

/// Zero extension of a fluid field to the full box `omega x (0,1)`.
///
/// The extension is discontinuous across obstacle walls, so it keeps the
/// nodal field on the box mesh together with the fluid-column indicator and
/// integrates only over supported columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedField {
    field: Field,
    support: Arc<Vec<bool>>,
}

impl ExtendedField {
    pub fn field(&self) -> &Field {
        &self.field
    }

    /// Whether horizontal column `(i, j)` carries fluid.
    pub fn is_supported(&self, i: usize, j: usize) -> bool {
        self.support[i + self.field.mesh.cells()[0] * j]
    }

    fn supported_elements(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let nx = self.field.mesh.cells()[0];
        self.field
            .mesh
            .fluid_elements()
            .filter(move |e| self.support[e[0] + nx * e[1]])
    }

    pub fn integrate(&self) -> Vec<f64> {
        integrate_elements(&self.field, self.supported_elements())
    }

    /// Mean over the whole box.
    pub fn mean(&self) -> Vec<f64> {
        let vol = self.field.mesh.box_volume();
        self.integrate().into_iter().map(|v| v / vol).collect()
    }

    pub fn l2_norm(&self) -> f64 {
        l2_squared(&self.field, self.supported_elements()).sqrt()
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        if p == 2.0 {
            return self.l2_norm();
        }
        lp_power(&self.field, self.supported_elements(), p).powf(1.0 / p)
    }

    pub fn scaled(&self, c: f64) -> ExtendedField {
        ExtendedField {
            field: self.field.scaled(c),
            support: self.support.clone(),
        }
    }

    /// Trapezoidal average over `y3` of the extension, on the horizontal box mesh.
    pub fn vertical_average(&self) -> ExtendedField {
        let avg = super::operators::vertical_average(&self.field);
        ExtendedField {
            field: avg.field,
            support: self.support.clone(),
        }
    }
}

/// Zero extension `U_eps` of a field on the perforated mesh.
pub fn extend_by_zero(v: &Field) -> ExtendedField {
    let mesh = v.mesh();
    let boxed = Arc::new(mesh.full_box());
    let k = v.components();
    let mut values = vec![0.0; boxed.node_count() * k];
    for node in 0..boxed.node_count() {
        let g = boxed.grid_of_node(node);
        if let Some(src) = mesh.node_of_grid(g) {
            values[node * k..(node + 1) * k].copy_from_slice(v.node_values(src));
        }
    }
    let [nx, ny, _] = mesh.cells();
    let support = (0..nx * ny)
        .map(|c| !mesh.is_solid_column(c % nx, c / nx))
        .collect();
    ExtendedField {
        field: Field::from_values(boxed, k, values),
        support: Arc::new(support),
    }
}

/// Broken (per-facet) data on the facets of one tag: every facet stores its
/// own corner values, so piecewise data such as face-wise constant surface
/// forcing is represented exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct FacetField {
    mesh: Arc<Mesh>,
    tag: BoundaryTag,
    facets: Vec<usize>,
    components: usize,
    corners: usize,
    values: Vec<f64>,
}

impl FacetField {
    /// Trace of a nodal field on the facets of `tag`.
    pub fn trace(field: &Field, tag: BoundaryTag) -> FacetField {
        let mesh = field.mesh().clone();
        let k = field.components();
        let facets: Vec<usize> = mesh.facets_with_tag(tag).map(|(i, _)| i).collect();
        let corners = 1 << (mesh.dim() - 1);
        let mut values = Vec::with_capacity(facets.len() * corners * k);
        for &fi in &facets {
            for node in mesh.facet_nodes(&mesh.facets()[fi]) {
                values.extend_from_slice(field.node_values(node));
            }
        }
        FacetField {
            mesh,
            tag,
            facets,
            components: k,
            corners,
            values,
        }
    }

    /// Facet-wise constant data given by a function of the facet and its centre.
    pub fn from_facet_fn(
        mesh: Arc<Mesh>,
        tag: BoundaryTag,
        components: usize,
        f: impl Fn(&Facet, [f64; 3]) -> Vec<f64>,
    ) -> FacetField {
        let facets: Vec<usize> = mesh.facets_with_tag(tag).map(|(i, _)| i).collect();
        let corners = 1 << (mesh.dim() - 1);
        let mut values = Vec::with_capacity(facets.len() * corners * components);
        for &fi in &facets {
            let facet = &mesh.facets()[fi];
            let v = f(facet, mesh.facet_center(facet));
            assert_eq!(v.len(), components);
            for _ in 0..corners {
                values.extend_from_slice(&v);
            }
        }
        FacetField {
            mesh,
            tag,
            facets,
            components,
            corners,
            values,
        }
    }

    pub fn from_parts(
        mesh: Arc<Mesh>,
        tag: BoundaryTag,
        facets: Vec<usize>,
        components: usize,
        values: Vec<f64>,
    ) -> FacetField {
        let corners = 1 << (mesh.dim() - 1);
        assert_eq!(values.len(), facets.len() * corners * components);
        FacetField {
            mesh,
            tag,
            facets,
            components,
            corners,
            values,
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn tag(&self) -> BoundaryTag {
        self.tag
    }

    /// Indices into `mesh.facets()`.
    pub fn facets(&self) -> &[usize] {
        &self.facets
    }

    pub fn components(&self) -> usize {
        self.components
    }

    /// Corner values per facet (`2^(dim-1)` corners).
    pub fn corners(&self) -> usize {
        self.corners
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Values of facet slot `i` (corner-major).
    pub fn facet_values(&self, i: usize) -> &[f64] {
        let w = self.corners * self.components;
        &self.values[i * w..(i + 1) * w]
    }

    pub fn scaled(&self, c: f64) -> FacetField {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    pub fn measure(&self) -> f64 {
        self.facets
            .iter()
            .map(|&fi| self.mesh.facet_measure(&self.mesh.facets()[fi]))
            .sum()
    }

    fn local_corners(&self, facet: &Facet) -> Vec<usize> {
        self.mesh.facet_local_corners(facet)
    }

    pub fn integrate(&self) -> Vec<f64> {
        let em = ElementMatrices::new(self.mesh.dim(), self.mesh.spacing());
        let k = self.components;
        let mut out = vec![Sum::default(); k];
        for (i, &fi) in self.facets.iter().enumerate() {
            let w = em.facet_load(self.mesh.facets()[fi].axis);
            let vals = self.facet_values(i);
            for a in 0..self.corners {
                for c in 0..k {
                    out[c] += w * vals[a * k + c];
                }
            }
        }
        out.into_iter().map(Sum::value).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let m = self.measure();
        self.integrate().into_iter().map(|v| v / m).collect()
    }

    pub fn l2_norm(&self) -> f64 {
        let em = ElementMatrices::new(self.mesh.dim(), self.mesh.spacing());
        let k = self.components;
        let mut total = Sum::default();
        for (i, &fi) in self.facets.iter().enumerate() {
            let facet = &self.mesh.facets()[fi];
            let local = self.local_corners(facet);
            let vals = self.facet_values(i);
            for (x, &a) in local.iter().enumerate() {
                for (y, &b) in local.iter().enumerate() {
                    let mut dot = 0.0;
                    for c in 0..k {
                        dot += vals[x * k + c] * vals[y * k + c];
                    }
                    total += em.facet_mass(facet.axis, a, b) * dot;
                }
            }
        }
        total.value().sqrt()
    }

    /// `L^p` norm on the facets; `p = 2` exact, otherwise 3-point Gauss.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p == 2.0 {
            return self.l2_norm();
        }
        let dim = self.mesh.dim();
        let rule = gauss_rule(dim - 1, 3);
        let k = self.components;
        let mut total = Sum::default();
        for (i, &fi) in self.facets.iter().enumerate() {
            let facet = &self.mesh.facets()[fi];
            let area = self.mesh.facet_measure(facet);
            let local = self.local_corners(facet);
            let vals = self.facet_values(i);
            for (q, w) in &rule {
                // spread the (dim-1) rule over the tangential axes
                let mut t = [0.0; 3];
                let mut slot = 0;
                for (d, td) in t.iter_mut().enumerate().take(dim) {
                    if d == facet.axis {
                        *td = if facet.side == super::mesh::Side::Hi { 1.0 } else { 0.0 };
                    } else {
                        *td = q[slot];
                        slot += 1;
                    }
                }
                let s = shape_values(dim, t);
                let mut sq = 0.0;
                for c in 0..k {
                    let v: f64 = local
                        .iter()
                        .enumerate()
                        .map(|(x, &a)| s[a] * vals[x * k + c])
                        .sum();
                    sq += v * v;
                }
                total += w * area * sq.sqrt().powf(p);
            }
        }
        total.value().powf(1.0 / p)
    }
}
