//! Structured tensor-product meshes on unit cells and perforated layers.
//!
//! Elements are axis-aligned boxes. Obstacles are vertical extrusions, so the
//! solid/fluid mask lives on horizontal columns. Nodes that touch no fluid
//! element are inactive and carry no unknowns.

use thiserror::Error;

use crate::geometry::{kappa, BoundaryTag, ObstacleShape, PerforatedDomain, UnitCell};

const INACTIVE: u32 = u32::MAX;
const SPACING_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("spacing {h} does not conform to length {length}")]
    NonconformingSpacing { h: f64, length: f64 },
    #[error("staircase obstacle reaches the boundary of the unit cell")]
    ObstacleTouchesCellBoundary,
    #[error("vertical layer count must be positive")]
    InvalidLayers,
}

/// Which side of an element a facet sits on along its normal axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Lo,
    Hi,
}

impl Side {
    fn bit(self) -> usize {
        match self {
            Side::Lo => 0,
            Side::Hi => 1,
        }
    }

    fn sign(self) -> f64 {
        match self {
            Side::Lo => -1.0,
            Side::Hi => 1.0,
        }
    }
}

/// One boundary face of one fluid element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Facet {
    /// Grid index `(i, j, k)` of the owning fluid element.
    pub element: [usize; 3],
    pub axis: usize,
    pub side: Side,
    pub tag: BoundaryTag,
    /// Lattice cell (macro cell) or obstacle the facet bounds, for obstacle facets.
    pub obstacle: Option<u32>,
}

/// Lattice metadata of a perforated-layer mesh: macro cell `k` starts at
/// grid node `(k1 m, k2 m)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lattice {
    pub epsilon: f64,
    pub subdivisions: usize,
    pub cell_counts: [usize; 2],
    /// Centre of lattice cell `(0, 0)`.
    pub origin: [f64; 2],
}

/// Unit-cell geometry as resolved by the mesh mask (staircase for disks).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasuredCell {
    pub fluid_area: f64,
    pub obstacle_perimeter: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    cells: [usize; 3],
    spacing: [f64; 3],
    origin: [f64; 3],
    periodic: [bool; 2],
    solid: Vec<bool>,
    column_obstacle: Vec<u32>,
    node_of_grid: Vec<u32>,
    grid_of_node: Vec<usize>,
    facets: Vec<Facet>,
    lattice: Option<Lattice>,
    shape: ObstacleShape,
    measured: MeasuredCell,
}

/// Subdivision count `length / h`, which must be an integer.
fn subdivisions(length: f64, h: f64) -> Result<usize, MeshError> {
    let q = length / h;
    let m = q.round();
    if !(h > 0.0 && h.is_finite()) || m < 1.0 || (q - m).abs() > SPACING_TOL * m {
        return Err(MeshError::NonconformingSpacing { h, length });
    }
    Ok(m as usize)
}

/// Squares must be resolved exactly: their faces have to fall on grid lines.
fn check_square_conformity(shape: &ObstacleShape, m: usize) -> Result<(), MeshError> {
    if let ObstacleShape::Square { side } = *shape {
        let offset = (1.0 - side) * m as f64 / 2.0;
        if (offset - offset.round()).abs() > SPACING_TOL * m as f64 {
            return Err(MeshError::NonconformingSpacing {
                h: 1.0 / m as f64,
                length: side,
            });
        }
    }
    Ok(())
}

impl Mesh {
    /// Mesh of the unit cell `Y'` (2D, `layers = None`) or of its extrusion
    /// `Y' x (0,1)` with `layers` vertical elements. Horizontal spacing `h`.
    pub fn unit_cell(
        cell: &UnitCell,
        h: f64,
        layers: Option<usize>,
        periodic: bool,
    ) -> Result<Mesh, MeshError> {
        let m = subdivisions(1.0, h)?;
        check_square_conformity(&cell.shape, m)?;
        let dim = if layers.is_some() { 3 } else { 2 };
        let nz = layers.unwrap_or(0);
        if dim == 3 && nz == 0 {
            return Err(MeshError::InvalidLayers);
        }
        let hh = 1.0 / m as f64;
        let mut solid = vec![false; m * m];
        for j in 0..m {
            for i in 0..m {
                let y = [-0.5 + (i as f64 + 0.5) * hh, -0.5 + (j as f64 + 0.5) * hh];
                if cell.shape.contains(y) {
                    if i == 0 || j == 0 || i == m - 1 || j == m - 1 {
                        return Err(MeshError::ObstacleTouchesCellBoundary);
                    }
                    solid[i + m * j] = true;
                }
            }
        }
        let column_obstacle = solid.iter().map(|&s| if s { 0 } else { INACTIVE }).collect();
        let vertical = if dim == 3 { 1.0 / nz as f64 } else { 0.0 };
        Ok(Mesh::assemble(
            dim,
            [m, m, nz],
            [hh, hh, vertical],
            [-0.5, -0.5, 0.0],
            [periodic, periodic],
            solid,
            column_obstacle,
            None,
            cell.shape,
        ))
    }

    /// Mesh of the rescaled perforated layer `omega_eps x (0,1)` with horizontal
    /// spacing `h` (dividing `eps`) and `layers` vertical elements.
    pub fn perforated(domain: &PerforatedDomain, h: f64, layers: usize) -> Result<Mesh, MeshError> {
        Mesh::perforated_with_periodicity(domain, h, layers, [false, false])
    }

    /// Perforated layer whose lateral faces normal to `x_a` are identified
    /// when `periodic[a]` holds (a channel when only one axis is periodic).
    pub fn perforated_with_periodicity(
        domain: &PerforatedDomain,
        h: f64,
        layers: usize,
        periodic: [bool; 2],
    ) -> Result<Mesh, MeshError> {
        if layers == 0 {
            return Err(MeshError::InvalidLayers);
        }
        let m = subdivisions(domain.epsilon, h)?;
        check_square_conformity(&domain.cell.shape, m)?;
        // the reference cell mask decides every macro cell
        let reference = Mesh::unit_cell(&domain.cell, 1.0 / m as f64, None, false)?;
        let [n1, n2] = domain.cell_counts;
        let (nx, ny) = (n1 * m, n2 * m);
        let mut solid = vec![false; nx * ny];
        let mut column_obstacle = vec![INACTIVE; nx * ny];
        for j in 0..ny {
            for i in 0..nx {
                let (k1, a) = (i / m, i % m);
                let (k2, b) = (j / m, j % m);
                if reference.solid[a + m * b] {
                    solid[i + nx * j] = true;
                    column_obstacle[i + nx * j] = (k1 + n1 * k2) as u32;
                }
            }
        }
        let hh = domain.epsilon / m as f64;
        let lattice = Lattice {
            epsilon: domain.epsilon,
            subdivisions: m,
            cell_counts: domain.cell_counts,
            origin: domain.lattice_origin,
        };
        Ok(Mesh::assemble(
            3,
            [nx, ny, layers],
            [hh, hh, 1.0 / layers as f64],
            [domain.omega.lo[0], domain.omega.lo[1], 0.0],
            periodic,
            solid,
            column_obstacle,
            Some(lattice),
            domain.cell.shape,
        ))
    }

    /// Same grid with the mask cleared: the full box `omega x (0,1)`.
    pub fn full_box(&self) -> Mesh {
        let n = self.solid.len();
        Mesh::assemble(
            self.dim,
            self.cells,
            self.spacing,
            self.origin,
            self.periodic,
            vec![false; n],
            vec![INACTIVE; n],
            self.lattice,
            ObstacleShape::None,
        )
    }

    /// 2D mesh of the horizontal footprint, with the same mask.
    pub fn horizontal(&self) -> Mesh {
        Mesh::assemble(
            2,
            [self.cells[0], self.cells[1], 0],
            [self.spacing[0], self.spacing[1], 0.0],
            [self.origin[0], self.origin[1], 0.0],
            self.periodic,
            self.solid.clone(),
            self.column_obstacle.clone(),
            self.lattice,
            self.shape,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        dim: usize,
        cells: [usize; 3],
        spacing: [f64; 3],
        origin: [f64; 3],
        periodic: [bool; 2],
        solid: Vec<bool>,
        column_obstacle: Vec<u32>,
        lattice: Option<Lattice>,
        shape: ObstacleShape,
    ) -> Mesh {
        let mut mesh = Mesh {
            dim,
            cells,
            spacing,
            origin,
            periodic,
            solid,
            column_obstacle,
            node_of_grid: Vec::new(),
            grid_of_node: Vec::new(),
            facets: Vec::new(),
            lattice,
            shape,
            measured: MeasuredCell {
                fluid_area: 0.0,
                obstacle_perimeter: 0.0,
            },
        };
        mesh.number_nodes();
        mesh.collect_facets();
        mesh.measured = mesh.measure();
        mesh
    }

    fn number_nodes(&mut self) {
        let total = self.grid_node_count();
        let mut active = vec![false; total];
        for e in self.fluid_elements() {
            for a in 0..self.local_node_count() {
                let g = self.representative(self.element_corner(e, a));
                active[g] = true;
            }
        }
        let mut node_of_grid = vec![INACTIVE; total];
        let mut grid_of_node = Vec::new();
        for g in 0..total {
            if active[g] && self.representative(g) == g {
                node_of_grid[g] = grid_of_node.len() as u32;
                grid_of_node.push(g);
            }
        }
        for g in 0..total {
            let r = self.representative(g);
            if r != g {
                node_of_grid[g] = node_of_grid[r];
            }
        }
        self.node_of_grid = node_of_grid;
        self.grid_of_node = grid_of_node;
    }

    fn collect_facets(&mut self) {
        let mut facets = Vec::new();
        let nx = self.cells[0];
        for e in self.fluid_elements() {
            let [i, j, _] = e;
            for axis in 0..self.dim {
                for side in [Side::Lo, Side::Hi] {
                    let count = self.cells[axis];
                    let idx = e[axis];
                    let at_edge = match side {
                        Side::Lo => idx == 0,
                        Side::Hi => idx + 1 == count,
                    };
                    let tag = if axis < 2 {
                        if at_edge {
                            if self.periodic[axis] {
                                Some(BoundaryTag::Periodic(axis))
                            } else {
                                Some(BoundaryTag::Exterior)
                            }
                        } else {
                            let mut nb = [i, j];
                            match side {
                                Side::Lo => nb[axis] -= 1,
                                Side::Hi => nb[axis] += 1,
                            }
                            let col = nb[0] + nx * nb[1];
                            if self.solid[col] {
                                Some(BoundaryTag::Obstacle)
                            } else {
                                None
                            }
                        }
                    } else if at_edge {
                        Some(match side {
                            Side::Lo => BoundaryTag::Bottom,
                            Side::Hi => BoundaryTag::Top,
                        })
                    } else {
                        None
                    };
                    let Some(tag) = tag else { continue };
                    let obstacle = if tag == BoundaryTag::Obstacle {
                        let mut nb = [i, j];
                        match side {
                            Side::Lo => nb[axis] -= 1,
                            Side::Hi => nb[axis] += 1,
                        }
                        Some(self.column_obstacle[nb[0] + nx * nb[1]])
                    } else {
                        None
                    };
                    facets.push(Facet {
                        element: e,
                        axis,
                        side,
                        tag,
                        obstacle,
                    });
                }
            }
        }
        self.facets = facets;
    }

    fn measure(&self) -> MeasuredCell {
        let [nx, ny, _] = self.cells;
        let area_cell = self.spacing[0] * self.spacing[1];
        let fluid_columns = self.solid.iter().filter(|s| !**s).count();
        let mut edges = 0usize;
        for j in 0..ny {
            for i in 0..nx {
                if self.solid[i + nx * j] {
                    continue;
                }
                let nbrs = [
                    (i > 0).then(|| i - 1 + nx * j),
                    (i + 1 < nx).then(|| i + 1 + nx * j),
                    (j > 0).then(|| i + nx * (j - 1)),
                    (j + 1 < ny).then(|| i + nx * (j + 1)),
                ];
                edges += nbrs.iter().flatten().filter(|&&c| self.solid[c]).count();
            }
        }
        // per unit cell, in unit-cell length units
        let (cells, scale) = match self.lattice {
            Some(l) => ((l.cell_counts[0] * l.cell_counts[1]) as f64, l.epsilon),
            None => (1.0, 1.0),
        };
        MeasuredCell {
            fluid_area: fluid_columns as f64 * area_cell / (cells * scale * scale),
            obstacle_perimeter: edges as f64 * self.spacing[0] / (cells * scale),
        }
    }

    // ----- sizes and indexing -----

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Element counts per axis (the vertical count is 0 for 2D meshes).
    pub fn cells(&self) -> [usize; 3] {
        self.cells
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn periodic(&self) -> [bool; 2] {
        self.periodic
    }

    pub fn lattice(&self) -> Option<&Lattice> {
        self.lattice.as_ref()
    }

    pub fn shape(&self) -> ObstacleShape {
        self.shape
    }

    /// Unit-cell area and perimeter as resolved by the mask.
    pub fn measured_cell(&self) -> MeasuredCell {
        self.measured
    }

    /// Lattice cell and micro coordinate `y' in Y'` of a horizontal point.
    /// Unit-cell meshes are their own single cell.
    pub fn micro_coordinate(&self, x: [f64; 2]) -> ([i64; 2], [f64; 2]) {
        match self.lattice {
            Some(l) => {
                let rel = [x[0] - l.origin[0], x[1] - l.origin[1]];
                let k = kappa(rel, l.epsilon);
                let y = [
                    (rel[0] - k[0] as f64 * l.epsilon) / l.epsilon,
                    (rel[1] - k[1] as f64 * l.epsilon) / l.epsilon,
                ];
                (k, y)
            }
            None => ([0, 0], x),
        }
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn facets_with_tag(&self, tag: BoundaryTag) -> impl Iterator<Item = (usize, &Facet)> {
        self.facets
            .iter()
            .enumerate()
            .filter(move |(_, f)| f.tag == tag)
    }

    pub fn has_tag(&self, tag: BoundaryTag) -> bool {
        self.facets.iter().any(|f| f.tag == tag)
    }

    /// Number of active (unknown-carrying) nodes.
    pub fn node_count(&self) -> usize {
        self.grid_of_node.len()
    }

    pub fn local_node_count(&self) -> usize {
        1 << self.dim
    }

    pub fn grid_node_count(&self) -> usize {
        let nz = if self.dim == 3 { self.cells[2] + 1 } else { 1 };
        (self.cells[0] + 1) * (self.cells[1] + 1) * nz
    }

    /// Node counts per axis of the full grid.
    pub fn grid_dims(&self) -> [usize; 3] {
        let nz = if self.dim == 3 { self.cells[2] + 1 } else { 1 };
        [self.cells[0] + 1, self.cells[1] + 1, nz]
    }

    pub fn grid_index(&self, ijk: [usize; 3]) -> usize {
        let [gx, gy, _] = self.grid_dims();
        ijk[0] + gx * (ijk[1] + gy * ijk[2])
    }

    pub fn grid_coords(&self, g: usize) -> [usize; 3] {
        let [gx, gy, _] = self.grid_dims();
        [g % gx, (g / gx) % gy, g / (gx * gy)]
    }

    pub fn node_position(&self, node: usize) -> [f64; 3] {
        self.grid_position(self.grid_of_node[node])
    }

    pub fn grid_position(&self, g: usize) -> [f64; 3] {
        let c = self.grid_coords(g);
        [
            self.origin[0] + c[0] as f64 * self.spacing[0],
            self.origin[1] + c[1] as f64 * self.spacing[1],
            self.origin[2] + c[2] as f64 * self.spacing[2],
        ]
    }

    /// Active node at a grid position, following periodic identification.
    pub fn node_at(&self, ijk: [usize; 3]) -> Option<usize> {
        let n = self.node_of_grid[self.grid_index(ijk)];
        (n != INACTIVE).then_some(n as usize)
    }

    pub fn node_of_grid(&self, g: usize) -> Option<usize> {
        let n = self.node_of_grid[g];
        (n != INACTIVE).then_some(n as usize)
    }

    pub fn grid_of_node(&self, node: usize) -> usize {
        self.grid_of_node[node]
    }

    /// Image of a grid node under the periodic identification of opposite faces.
    /// Nodes off the periodic faces map to themselves; the map is an involution.
    pub fn periodic_partner(&self, g: usize) -> usize {
        let mut c = self.grid_coords(g);
        for axis in 0..2 {
            if self.periodic[axis] {
                let last = self.cells[axis];
                if c[axis] == 0 {
                    c[axis] = last;
                } else if c[axis] == last {
                    c[axis] = 0;
                }
            }
        }
        self.grid_index(c)
    }

    fn representative(&self, g: usize) -> usize {
        let mut c = self.grid_coords(g);
        for axis in 0..2 {
            if self.periodic[axis] && c[axis] == self.cells[axis] {
                c[axis] = 0;
            }
        }
        self.grid_index(c)
    }

    pub fn element_count(&self) -> usize {
        let nz = if self.dim == 3 { self.cells[2] } else { 1 };
        self.cells[0] * self.cells[1] * nz
    }

    pub fn is_solid_column(&self, i: usize, j: usize) -> bool {
        self.solid[i + self.cells[0] * j]
    }

    pub fn solid_columns(&self) -> usize {
        self.solid.iter().filter(|s| **s).count()
    }

    /// Fluid elements in grid order.
    pub fn fluid_elements(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        let [nx, ny, nz] = self.cells;
        let nz = if self.dim == 3 { nz } else { 1 };
        (0..nz).flat_map(move |k| {
            (0..ny).flat_map(move |j| {
                (0..nx).filter_map(move |i| (!self.solid[i + nx * j]).then_some([i, j, k]))
            })
        })
    }

    pub fn fluid_element_count(&self) -> usize {
        let nz = if self.dim == 3 { self.cells[2] } else { 1 };
        self.solid.iter().filter(|s| !**s).count() * nz
    }

    /// Grid node of local corner `a` (bit `d` of `a` = offset along axis `d`).
    pub fn element_corner(&self, e: [usize; 3], a: usize) -> usize {
        let mut c = e;
        for (d, cd) in c.iter_mut().enumerate().take(self.dim) {
            *cd += (a >> d) & 1;
        }
        self.grid_index(c)
    }

    /// Active node ids of the element's corners.
    pub fn element_nodes(&self, e: [usize; 3]) -> [usize; 8] {
        let mut out = [usize::MAX; 8];
        for (a, slot) in out.iter_mut().enumerate().take(self.local_node_count()) {
            *slot = self.node_of_grid[self.element_corner(e, a)] as usize;
        }
        out
    }

    /// Lower corner of an element in physical coordinates.
    pub fn element_origin(&self, e: [usize; 3]) -> [f64; 3] {
        [
            self.origin[0] + e[0] as f64 * self.spacing[0],
            self.origin[1] + e[1] as f64 * self.spacing[1],
            self.origin[2] + e[2] as f64 * self.spacing[2],
        ]
    }

    pub fn element_volume(&self) -> f64 {
        self.spacing[..self.dim].iter().product()
    }

    /// Local corner indices lying on a facet.
    pub fn facet_local_corners(&self, f: &Facet) -> Vec<usize> {
        (0..self.local_node_count())
            .filter(|a| (a >> f.axis) & 1 == f.side.bit())
            .collect()
    }

    pub fn facet_nodes(&self, f: &Facet) -> Vec<usize> {
        self.facet_local_corners(f)
            .into_iter()
            .map(|a| self.node_of_grid[self.element_corner(f.element, a)] as usize)
            .collect()
    }

    /// Measure of a facet (length in 2D, area in 3D).
    pub fn facet_measure(&self, f: &Facet) -> f64 {
        (0..self.dim)
            .filter(|&d| d != f.axis)
            .map(|d| self.spacing[d])
            .product()
    }

    /// Unit normal pointing out of the fluid element.
    pub fn facet_normal(&self, f: &Facet) -> [f64; 3] {
        let mut n = [0.0; 3];
        n[f.axis] = f.side.sign();
        n
    }

    pub fn facet_center(&self, f: &Facet) -> [f64; 3] {
        let o = self.element_origin(f.element);
        let mut c = [0.0; 3];
        for d in 0..self.dim {
            c[d] = if d == f.axis {
                o[d] + f.side.bit() as f64 * self.spacing[d]
            } else {
                o[d] + 0.5 * self.spacing[d]
            };
        }
        c
    }

    /// Total measure of the fluid region.
    pub fn fluid_volume(&self) -> f64 {
        self.fluid_element_count() as f64 * self.element_volume()
    }

    /// Volume of the bounding box `omega x (0,1)` (or area in 2D).
    pub fn box_volume(&self) -> f64 {
        (0..self.dim)
            .map(|d| self.cells[d] as f64 * self.spacing[d])
            .product()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_perforated_domain, build_unit_cell, Rect};

    fn square(side: f64) -> UnitCell {
        build_unit_cell(ObstacleShape::square(side)).unwrap()
    }

    #[test]
    fn extruded_square_cell_counts() {
        let mesh = Mesh::unit_cell(&square(0.5), 1.0 / 8.0, Some(8), true).unwrap();
        assert_eq!(mesh.element_count(), 512);
        assert_eq!(mesh.fluid_element_count(), 512 - 4 * 4 * 8);
        assert_eq!(mesh.solid_columns(), 16);
        let m = mesh.measured_cell();
        assert!((m.fluid_area - 0.75).abs() < 1e-14);
        assert!((m.obstacle_perimeter - 2.0).abs() < 1e-14);
        // periodic: 8 x 8 horizontal nodes, minus the 3 x 3 strictly inside the obstacle
        assert_eq!(mesh.node_count(), (64 - 9) * 9);
    }

    #[test]
    fn perforated_layer_counts() {
        let d = build_perforated_domain(0.25, square(0.5), Rect::UNIT_SQUARE).unwrap();
        let mesh = Mesh::perforated(&d, 1.0 / 16.0, 8).unwrap();
        assert_eq!(mesh.cells(), [16, 16, 8]);
        assert_eq!(mesh.solid_columns(), 16 * 4);
        assert_eq!(mesh.fluid_element_count(), (256 - 64) * 8);
        let obstacle_facets = mesh.facets_with_tag(BoundaryTag::Obstacle).count();
        assert_eq!(obstacle_facets, 16 * 8 * 8);
        assert!((mesh.measured_cell().fluid_area - 0.75).abs() < 1e-12);
        assert!((mesh.measured_cell().obstacle_perimeter - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_2d_cell_is_a_full_grid() {
        let cell = build_unit_cell(ObstacleShape::None).unwrap();
        let mesh = Mesh::unit_cell(&cell, 0.25, None, false).unwrap();
        assert_eq!(mesh.dim(), 2);
        assert_eq!(mesh.element_count(), 16);
        assert_eq!(mesh.fluid_element_count(), 16);
        assert_eq!(mesh.node_count(), 25);
        assert!(!mesh.has_tag(BoundaryTag::Obstacle));
    }

    #[test]
    fn nonconforming_square_spacing_is_rejected() {
        assert!(matches!(
            Mesh::unit_cell(&square(0.5), 0.5, Some(2), true),
            Err(MeshError::NonconformingSpacing { .. })
        ));
        assert!(matches!(
            Mesh::unit_cell(&square(0.5), 0.3, Some(2), true),
            Err(MeshError::NonconformingSpacing { .. })
        ));
    }

    #[test]
    fn staircase_disk_records_measured_geometry() {
        let disk = build_unit_cell(ObstacleShape::disk(0.25)).unwrap();
        let mesh = Mesh::unit_cell(&disk, 1.0 / 32.0, Some(4), true).unwrap();
        let m = mesh.measured_cell();
        assert!((m.fluid_area - disk.fluid_area).abs() < 0.02);
        // staircase perimeter overestimates 2 pi r by roughly 4/pi
        assert!(m.obstacle_perimeter > disk.obstacle_perimeter);
        assert!((m.obstacle_perimeter - 2.0).abs() < 0.1);
    }

    #[test]
    fn every_boundary_facet_has_one_tag_and_tags_partition() {
        let d = build_perforated_domain(0.5, square(0.5), Rect::UNIT_SQUARE).unwrap();
        let mesh = Mesh::perforated(&d, 0.125, 4).unwrap();
        let mut seen = std::collections::HashSet::new();
        for f in mesh.facets() {
            assert!(seen.insert((f.element, f.axis, f.side)));
        }
        let ext = mesh.facets_with_tag(BoundaryTag::Exterior).count();
        let top = mesh.facets_with_tag(BoundaryTag::Top).count();
        let bot = mesh.facets_with_tag(BoundaryTag::Bottom).count();
        assert_eq!(ext, 4 * 8 * 4);
        assert_eq!(top, 64 - 16);
        assert_eq!(bot, top);
    }

    #[test]
    fn periodic_partner_is_an_involution() {
        let mesh = Mesh::unit_cell(&square(0.5), 0.125, Some(2), true).unwrap();
        for g in 0..mesh.grid_node_count() {
            let p = mesh.periodic_partner(g);
            assert_eq!(mesh.periodic_partner(p), g);
            if let Some(n) = mesh.node_of_grid(g) {
                assert_eq!(mesh.node_of_grid(p), Some(n));
            }
        }
    }

    #[test]
    fn disk_touching_cell_edge_is_rejected() {
        let disk = build_unit_cell(ObstacleShape::disk(0.49)).unwrap();
        assert!(matches!(
            Mesh::unit_cell(&disk, 0.25, Some(2), true),
            Err(MeshError::ObstacleTouchesCellBoundary)
        ));
    }
}
