//! Wall fluxes, the weighted divergence identity and the energy balance.

use super::assembly::SaddleSystem;
use super::solve::StokesSolution;
use super::StokesError;
use crate::discretization::{gauss_rule, shape_values, ElementMatrices, Field, Side};
use crate::geometry::BoundaryTag;

/// `int_tag u.n` with `n` pointing out of the fluid.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxReport {
    pub tag: BoundaryTag,
    pub net: f64,
    /// `int_tag |u.n|`.
    pub absolute: f64,
    /// Net flux through each obstacle (lattice cell order), obstacle tags only.
    pub per_obstacle: Vec<f64>,
}

impl FluxReport {
    /// Largest net flux through a single obstacle.
    pub fn max_obstacle_flux(&self) -> f64 {
        self.per_obstacle.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn require_tag(u: &Field, tag: BoundaryTag) -> Result<(), StokesError> {
    if u.mesh().has_tag(tag) {
        Ok(())
    } else {
        Err(StokesError::UnknownTag(tag))
    }
}

fn sign(side: Side) -> f64 {
    match side {
        Side::Lo => -1.0,
        Side::Hi => 1.0,
    }
}

/// Net and absolute normal flux of `u` through the facets of `tag`.
pub fn boundary_flux(u: &Field, tag: BoundaryTag) -> Result<FluxReport, StokesError> {
    require_tag(u, tag)?;
    let mesh = u.mesh();
    let dim = mesh.dim();
    let em = ElementMatrices::new(dim, mesh.spacing());
    let rule = gauss_rule(dim - 1, 2);
    let obstacles = mesh
        .facets_with_tag(tag)
        .filter_map(|(_, f)| f.obstacle)
        .max()
        .map_or(0, |m| m as usize + 1);
    let mut per_obstacle = vec![0.0; obstacles];
    let mut net = 0.0;
    let mut absolute = 0.0;
    for (_, f) in mesh.facets_with_tag(tag) {
        let corners = mesh.facet_local_corners(f);
        let en = mesh.element_nodes(f.element);
        let s = sign(f.side);
        let w = em.facet_load(f.axis);
        let flux: f64 = corners
            .iter()
            .map(|&a| s * w * u.value(en[a], f.axis))
            .sum();
        net += flux;
        if let Some(o) = f.obstacle {
            per_obstacle[o as usize] += flux;
        }
        let area = mesh.facet_measure(f);
        for (q, wq) in &rule {
            let mut t = [0.0; 3];
            let mut slot = 0;
            for (d, td) in t.iter_mut().enumerate().take(dim) {
                if d == f.axis {
                    *td = if f.side == Side::Hi { 1.0 } else { 0.0 };
                } else {
                    *td = q[slot];
                    slot += 1;
                }
            }
            let sv = shape_values(dim, t);
            let un: f64 = corners.iter().map(|&a| sv[a] * u.value(en[a], f.axis)).sum();
            absolute += wq * area * un.abs();
        }
    }
    Ok(FluxReport {
        tag,
        net,
        absolute,
        per_obstacle,
    })
}

/// `int_tag (u.n) psi` (exact).
pub fn weighted_boundary_flux(u: &Field, psi: &Field, tag: BoundaryTag) -> Result<f64, StokesError> {
    require_tag(u, tag)?;
    let mesh = u.mesh();
    let em = ElementMatrices::new(mesh.dim(), mesh.spacing());
    let mut total = 0.0;
    for (_, f) in mesh.facets_with_tag(tag) {
        let corners = mesh.facet_local_corners(f);
        let en = mesh.element_nodes(f.element);
        let s = sign(f.side);
        for &a in &corners {
            for &b in &corners {
                total += s * em.facet_mass(f.axis, a, b) * u.value(en[a], f.axis) * psi.value(en[b], 0);
            }
        }
    }
    Ok(total)
}

/// `int u . grad_eps psi` over the fluid region (exact).
pub fn velocity_gradient_pairing(u: &Field, psi: &Field, epsilon: f64) -> f64 {
    let mesh = u.mesh();
    let dim = mesh.dim();
    let em = ElementMatrices::new(dim, mesh.spacing());
    let n = em.n;
    let mut total = 0.0;
    for e in mesh.fluid_elements() {
        let en = mesh.element_nodes(e);
        for i in 0..dim {
            let s = if i == 2 { 1.0 / epsilon } else { 1.0 };
            let m = &em.mixed[i];
            for a in 0..n {
                let ua = u.value(en[a], i);
                if ua == 0.0 {
                    continue;
                }
                for b in 0..n {
                    total += s * ua * m[a * n + b] * psi.value(en[b], 0);
                }
            }
        }
    }
    total
}

/// Pressure stabilization form `(delta/mu) sum_j h_j^2 int d_j p d_j psi`.
pub fn stabilization_form(p: &Field, psi: &Field, delta: f64, mu: f64) -> f64 {
    let h = p.mesh().spacing();
    let w = [h[0] * h[0], h[1] * h[1], h[2] * h[2]];
    delta / mu * p.weighted_gradient_inner(psi, w)
}

/// Both sides of `int u.grad_eps psi = int_{wall} (u.n) psi`.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceIdentity {
    pub lhs: f64,
    pub rhs: f64,
    /// `||u||_{L^2} ||grad_eps psi||_{L^2}`, the Cauchy-Schwarz bound on `lhs`.
    pub scale: f64,
    /// What the discrete continuity equation predicts for `lhs - rhs`:
    /// the stabilization form minus the multiplier term.
    pub predicted_defect: f64,
}

impl DivergenceIdentity {
    pub fn defect(&self) -> f64 {
        self.lhs - self.rhs
    }

    /// `|lhs - rhs| / scale`.
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            0.0
        } else {
            self.defect().abs() / self.scale
        }
    }
}

/// Evaluates the weighted divergence identity on the walls of `tag` for a
/// scalar test field `psi` that vanishes on the rest of the boundary.
pub fn divergence_identity(
    system: &SaddleSystem,
    solution: &StokesSolution,
    psi: &Field,
    tag: BoundaryTag,
) -> Result<DivergenceIdentity, StokesError> {
    let u = &solution.velocity;
    let eps = system.anisotropy().epsilon();
    let lhs = velocity_gradient_pairing(u, psi, eps);
    let rhs = weighted_boundary_flux(u, psi, tag)?;
    let scale = u.l2_norm() * psi.d_eps_norm(eps);
    let mut predicted = stabilization_form(&solution.pressure, psi, system.delta(), system.mu());
    if let Some(lambda) = solution.diagnostics.multiplier {
        predicted -= lambda * psi.integrate()[0];
    }
    Ok(DivergenceIdentity {
        lhs,
        rhs,
        scale,
        predicted_defect: predicted,
    })
}

/// Terms of the discrete energy balance
/// `mu ||D_eps u||^2 + sum c ||u||^2_wall + s(p, p) = int f.u + int g.u`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBalance {
    pub dissipation: f64,
    pub wall_friction: f64,
    pub stabilization: f64,
    pub work: f64,
}

impl EnergyBalance {
    /// `|dissipation + friction - work| / |work|`, the identity without the
    /// stabilization term.
    pub fn relative_defect(&self) -> f64 {
        let lhs = self.dissipation + self.wall_friction;
        if self.work == 0.0 {
            lhs.abs()
        } else {
            (lhs - self.work).abs() / self.work.abs()
        }
    }

    /// Same, with the stabilization term included (rounding level).
    pub fn discrete_defect(&self) -> f64 {
        let lhs = self.dissipation + self.wall_friction + self.stabilization;
        if self.work == 0.0 {
            lhs.abs()
        } else {
            (lhs - self.work).abs() / self.work.abs()
        }
    }
}

pub fn energy_balance(system: &SaddleSystem, solution: &StokesSolution) -> EnergyBalance {
    let u = &solution.velocity;
    let mesh = u.mesh();
    let dim = mesh.dim();
    let eps = system.anisotropy().epsilon();
    let dissipation = system.mu() * u.d_eps_norm_squared(eps);
    let em = ElementMatrices::new(dim, mesh.spacing());
    let mut wall_friction = 0.0;
    for &(tag, c) in system.robin_coefficients() {
        if c == 0.0 {
            continue;
        }
        for (_, f) in mesh.facets_with_tag(tag) {
            let corners = mesh.facet_local_corners(f);
            let en = mesh.element_nodes(f.element);
            for &a in &corners {
                for &b in &corners {
                    let m = em.facet_mass(f.axis, a, b);
                    for i in 0..dim {
                        wall_friction += c * m * u.value(en[a], i) * u.value(en[b], i);
                    }
                }
            }
        }
    }
    let k = system.dofs().components();
    let load = system.load();
    let mut work = 0.0;
    for node in 0..mesh.node_count() {
        for i in 0..dim {
            work += load[node * k + i] * u.value(node, i);
        }
    }
    let p = &solution.pressure;
    let stabilization = stabilization_form(p, p, system.delta(), system.mu());
    EnergyBalance {
        dissipation,
        wall_friction,
        stabilization,
        work,
    }
}
