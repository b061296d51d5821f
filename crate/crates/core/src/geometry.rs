//! Periodic unit cell, its vertical extrusion, and the rescaled perforated layer.
//!
//! The reference cell is `Y' = [-1/2, 1/2]^2`, split into an obstacle `T'`
//! centred at the origin and the fluid part `Y'_f`. The fine domain is the
//! rescaled layer `omega_eps x (0, 1)`: every lattice cell of side `eps`
//! covering `omega` carries one scaled copy of `T'`.

use std::f64::consts::PI;

use thiserror::Error;

/// Relative tolerance used when checking that `1/eps` and lattice offsets are integers.
const LATTICE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("obstacle {0:?} is not strictly inside the unit cell")]
    ShapeTooLarge(ObstacleShape),
    #[error("obstacle size must be positive and finite, got {0}")]
    InvalidSize(f64),
    #[error("1/epsilon must be a positive integer, got epsilon = {0}")]
    NonconformingEpsilon(f64),
    #[error("omega {0:?} is not tiled by whole lattice cells of side {1}")]
    MisalignedOmega(Rect, f64),
    #[error("obstacle of cell {0:?} touches the boundary of omega")]
    ObstacleTouchesBoundary([i64; 2]),
}

/// Cross-section of the vertical cylinders, in unit-cell coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObstacleShape {
    /// Empty obstacle; the cell is pure fluid.
    None,
    /// Axis-aligned square of the given side, centred in the cell.
    Square { side: f64 },
    /// Disk of the given radius, centred in the cell.
    Disk { radius: f64 },
}

impl ObstacleShape {
    pub fn square(side: f64) -> Self {
        ObstacleShape::Square { side }
    }

    pub fn disk(radius: f64) -> Self {
        ObstacleShape::Disk { radius }
    }

    /// Short label used in reports: `none`, `square`, `disk`.
    pub fn kind_name(&self) -> &'static str {
        match self {
            ObstacleShape::None => "none",
            ObstacleShape::Square { .. } => "square",
            ObstacleShape::Disk { .. } => "disk",
        }
    }

    /// Side length or radius; zero for the empty obstacle.
    pub fn size(&self) -> f64 {
        match *self {
            ObstacleShape::None => 0.0,
            ObstacleShape::Square { side } => side,
            ObstacleShape::Disk { radius } => radius,
        }
    }

    /// Whether the point `y'` (cell coordinates, centred) lies inside the open obstacle.
    pub fn contains(&self, y: [f64; 2]) -> bool {
        match *self {
            ObstacleShape::None => false,
            ObstacleShape::Square { side } => y[0].abs() < side / 2.0 && y[1].abs() < side / 2.0,
            ObstacleShape::Disk { radius } => y[0] * y[0] + y[1] * y[1] < radius * radius,
        }
    }

    /// Half-width of the obstacle's axis-aligned bounding box.
    pub fn half_extent(&self) -> f64 {
        match *self {
            ObstacleShape::None => 0.0,
            ObstacleShape::Square { side } => side / 2.0,
            ObstacleShape::Disk { radius } => radius,
        }
    }

    fn validate(&self) -> Result<(), GeometryError> {
        let size = self.size();
        if matches!(self, ObstacleShape::None) {
            return Ok(());
        }
        if !(size.is_finite() && size > 0.0) {
            return Err(GeometryError::InvalidSize(size));
        }
        // closure of T' strictly inside Y'
        if self.half_extent() >= 0.5 {
            return Err(GeometryError::ShapeTooLarge(*self));
        }
        Ok(())
    }
}

/// The periodic microstructure together with its analytic geometric constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitCell {
    pub shape: ObstacleShape,
    /// `|Y'_f|`.
    pub fluid_area: f64,
    /// `|dT'|`.
    pub obstacle_perimeter: f64,
    /// Fluid fraction `|Y'_f| / |Y'|`.
    pub theta: f64,
    /// Scaled obstacle perimeter `|dT'| / |Y'|`.
    pub mu1: f64,
}

impl UnitCell {
    pub fn has_obstacle(&self) -> bool {
        !matches!(self.shape, ObstacleShape::None)
    }
}

/// Builds the unit cell and its constants in closed form.
pub fn build_unit_cell(shape: ObstacleShape) -> Result<UnitCell, GeometryError> {
    shape.validate()?;
    let (obstacle_area, obstacle_perimeter) = match shape {
        ObstacleShape::None => (0.0, 0.0),
        ObstacleShape::Square { side } => (side * side, 4.0 * side),
        ObstacleShape::Disk { radius } => (PI * radius * radius, 2.0 * PI * radius),
    };
    let fluid_area = 1.0 - obstacle_area;
    Ok(UnitCell {
        shape,
        fluid_area,
        obstacle_perimeter,
        // |Y'| = 1
        theta: fluid_area,
        mu1: obstacle_perimeter,
    })
}

/// Axis-aligned rectangle `[lo, hi]` in the horizontal plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Rect {
    pub const UNIT_SQUARE: Rect = Rect {
        lo: [0.0, 0.0],
        hi: [1.0, 1.0],
    };

    pub fn width(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn area(&self) -> f64 {
        self.width(0) * self.width(1)
    }

    pub fn center(&self) -> [f64; 2] {
        [
            0.5 * (self.lo[0] + self.hi[0]),
            0.5 * (self.lo[1] + self.hi[1]),
        ]
    }
}

impl Default for Rect {
    fn default() -> Self {
        Rect::UNIT_SQUARE
    }
}

/// Lattice cell index of `x'`: the unique `k'` with `x' in eps k' + eps [-1/2, 1/2)^2`.
pub fn kappa(x: [f64; 2], eps: f64) -> [i64; 2] {
    [
        (x[0] / eps + 0.5).floor() as i64,
        (x[1] / eps + 0.5).floor() as i64,
    ]
}

/// Returns `n` when `1/eps` is (numerically) the positive integer `n`.
pub fn inverse_epsilon(eps: f64) -> Result<usize, GeometryError> {
    if !(eps.is_finite() && eps > 0.0 && eps < 1.0 + LATTICE_TOL) {
        return Err(GeometryError::NonconformingEpsilon(eps));
    }
    let inv = 1.0 / eps;
    let n = inv.round();
    if n < 1.0 || (inv - n).abs() > LATTICE_TOL * n {
        return Err(GeometryError::NonconformingEpsilon(eps));
    }
    Ok(n as usize)
}

/// Classification of the boundary of the rescaled fluid domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    /// Lateral part of `d Omega` (`d omega x (0,1)`).
    Exterior,
    /// Lateral surface of the cylinders, `dT_eps`.
    Obstacle,
    /// `y3 = 1`.
    Top,
    /// `y3 = 0`.
    Bottom,
    /// Face identified with the opposite face of a periodic cell, with the axis it is normal to.
    Periodic(usize),
}

/// The perforated layer `omega_eps x (0,1)` for one value of `eps`.
///
/// Lattice cells are `origin + eps k' + eps Y'` with `k' in {0..n-1}^2`, where the
/// lattice origin is chosen so that those cells tile `omega` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct PerforatedDomain {
    pub epsilon: f64,
    /// `1/eps`.
    pub cells_per_unit: usize,
    pub cell: UnitCell,
    pub omega: Rect,
    /// Translation aligning the paper lattice `eps k' + eps Y'` with `omega`.
    pub lattice_origin: [f64; 2],
    /// Lattice cells per axis covering `omega`.
    pub cell_counts: [usize; 2],
    /// Indices `k'` of the cells carrying an obstacle, row-major in `k'_2`.
    pub cell_indices: Vec<[i64; 2]>,
}

impl PerforatedDomain {
    /// Number of lattice cells (macro cells) covering `omega`.
    pub fn cell_count(&self) -> usize {
        self.cell_counts[0] * self.cell_counts[1]
    }

    pub fn obstacle_count(&self) -> usize {
        self.cell_indices.len()
    }

    /// Centre of lattice cell `k'` in physical coordinates.
    pub fn cell_center(&self, k: [i64; 2]) -> [f64; 2] {
        [
            self.lattice_origin[0] + self.epsilon * k[0] as f64,
            self.lattice_origin[1] + self.epsilon * k[1] as f64,
        ]
    }

    /// Lattice cell of a physical point, using the half-open cell convention.
    pub fn cell_of(&self, x: [f64; 2]) -> [i64; 2] {
        kappa(
            [x[0] - self.lattice_origin[0], x[1] - self.lattice_origin[1]],
            self.epsilon,
        )
    }

    /// Micro coordinate `y' = (x' - centre(k'))/eps` of a physical point.
    pub fn micro_coordinate(&self, x: [f64; 2]) -> ([i64; 2], [f64; 2]) {
        let k = self.cell_of(x);
        let c = self.cell_center(k);
        (k, [(x[0] - c[0]) / self.epsilon, (x[1] - c[1]) / self.epsilon])
    }

    /// Physical side length of the scaled obstacle bounding box.
    pub fn obstacle_extent(&self) -> f64 {
        2.0 * self.cell.shape.half_extent() * self.epsilon
    }

    /// Exact fluid area of `omega_eps`.
    pub fn fluid_area(&self) -> f64 {
        self.cell_count() as f64 * self.epsilon * self.epsilon * self.cell.fluid_area
    }

    /// Whether a point is inside one of the scaled obstacles.
    pub fn in_obstacle(&self, x: [f64; 2]) -> bool {
        if !self.cell.has_obstacle() {
            return false;
        }
        let (k, y) = self.micro_coordinate(x);
        self.contains_cell(k) && self.cell.shape.contains(y)
    }

    fn contains_cell(&self, k: [i64; 2]) -> bool {
        k[0] >= 0
            && k[1] >= 0
            && (k[0] as usize) < self.cell_counts[0]
            && (k[1] as usize) < self.cell_counts[1]
    }
}

/// Builds the perforated layer for `eps = 1/n` over `omega`.
///
/// `omega` must have sides that are integer multiples of `eps`; the lattice is
/// translated so that its cells tile `omega` with no partial cells.
pub fn build_perforated_domain(
    epsilon: f64,
    cell: UnitCell,
    omega: Rect,
) -> Result<PerforatedDomain, GeometryError> {
    let n = inverse_epsilon(epsilon)?;
    let mut cell_counts = [0usize; 2];
    for axis in 0..2 {
        let cells = omega.width(axis) / epsilon;
        let rounded = cells.round();
        if rounded < 1.0 || (cells - rounded).abs() > LATTICE_TOL * rounded.max(1.0) {
            return Err(GeometryError::MisalignedOmega(omega, epsilon));
        }
        cell_counts[axis] = rounded as usize;
    }
    let lattice_origin = [omega.lo[0] + 0.5 * epsilon, omega.lo[1] + 0.5 * epsilon];
    let mut cell_indices = Vec::new();
    if cell.has_obstacle() {
        let half = cell.shape.half_extent() * epsilon;
        for k2 in 0..cell_counts[1] as i64 {
            for k1 in 0..cell_counts[0] as i64 {
                let c = [
                    lattice_origin[0] + epsilon * k1 as f64,
                    lattice_origin[1] + epsilon * k2 as f64,
                ];
                let touches = (0..2).any(|a| {
                    c[a] - half <= omega.lo[a] + LATTICE_TOL * epsilon
                        || c[a] + half >= omega.hi[a] - LATTICE_TOL * epsilon
                });
                if touches {
                    return Err(GeometryError::ObstacleTouchesBoundary([k1, k2]));
                }
                cell_indices.push([k1, k2]);
            }
        }
    }
    Ok(PerforatedDomain {
        epsilon,
        cells_per_unit: n,
        cell,
        omega,
        lattice_origin,
        cell_counts,
        cell_indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_cell_constants() {
        let c = build_unit_cell(ObstacleShape::square(0.5)).unwrap();
        assert_eq!(c.theta, 0.75);
        assert_eq!(c.mu1, 2.0);
        assert_eq!(c.fluid_area, 0.75);
        assert_eq!(c.obstacle_perimeter, 2.0);
    }

    #[test]
    fn disk_cell_constants() {
        let c = build_unit_cell(ObstacleShape::disk(0.25)).unwrap();
        assert!((c.theta - (1.0 - PI / 16.0)).abs() < 1e-15);
        assert!((c.theta - 0.80365).abs() < 1e-5);
        assert!((c.mu1 - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn empty_cell_constants() {
        let c = build_unit_cell(ObstacleShape::None).unwrap();
        assert_eq!(c.theta, 1.0);
        assert_eq!(c.mu1, 0.0);
    }

    #[test]
    fn oversized_obstacles_are_rejected() {
        assert!(matches!(
            build_unit_cell(ObstacleShape::square(1.0)),
            Err(GeometryError::ShapeTooLarge(_))
        ));
        assert!(matches!(
            build_unit_cell(ObstacleShape::disk(0.5)),
            Err(GeometryError::ShapeTooLarge(_))
        ));
        assert!(matches!(
            build_unit_cell(ObstacleShape::square(0.0)),
            Err(GeometryError::InvalidSize(_))
        ));
        assert!(build_unit_cell(ObstacleShape::square(0.999)).is_ok());
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa([0.3, -0.7], 1.0), [0, -1]);
        assert_eq!(kappa([0.5, 0.5], 1.0), [1, 1]);
        assert_eq!(kappa([0.26, 0.0], 0.5), [1, 0]);
        assert_eq!(kappa([-0.5, 0.49], 1.0), [0, 0]);
    }

    #[test]
    fn perforated_domain_counts() {
        let sq = build_unit_cell(ObstacleShape::square(0.5)).unwrap();
        let d = build_perforated_domain(0.25, sq, Rect::UNIT_SQUARE).unwrap();
        assert_eq!(d.cell_count(), 16);
        assert_eq!(d.obstacle_count(), 16);
        assert!((d.obstacle_extent() - 0.125).abs() < 1e-15);

        let disk = build_unit_cell(ObstacleShape::disk(0.25)).unwrap();
        let d = build_perforated_domain(0.5, disk, Rect::UNIT_SQUARE).unwrap();
        assert_eq!(d.obstacle_count(), 4);
        assert!((d.cell.shape.size() * d.epsilon - 0.125).abs() < 1e-15);

        let d = build_perforated_domain(1.0 / 3.0, sq, Rect::UNIT_SQUARE).unwrap();
        assert_eq!(d.obstacle_count(), 9);
    }

    #[test]
    fn nonconforming_epsilon_is_rejected() {
        let sq = build_unit_cell(ObstacleShape::square(0.5)).unwrap();
        assert!(matches!(
            build_perforated_domain(0.3, sq, Rect::UNIT_SQUARE),
            Err(GeometryError::NonconformingEpsilon(_))
        ));
        assert!(matches!(
            build_perforated_domain(0.0, sq, Rect::UNIT_SQUARE),
            Err(GeometryError::NonconformingEpsilon(_))
        ));
        let wide = Rect {
            lo: [0.0, 0.0],
            hi: [1.1, 1.0],
        };
        assert!(matches!(
            build_perforated_domain(0.25, sq, wide),
            Err(GeometryError::MisalignedOmega(..))
        ));
    }

    #[test]
    fn empty_obstacle_domain_has_no_obstacles() {
        let c = build_unit_cell(ObstacleShape::None).unwrap();
        let d = build_perforated_domain(0.125, c, Rect::UNIT_SQUARE).unwrap();
        assert_eq!(d.obstacle_count(), 0);
        assert_eq!(d.cell_count(), 64);
        assert!(!d.in_obstacle([0.0625, 0.0625]));
    }

    #[test]
    fn tiling_fluid_area_is_theta_times_omega() {
        let sq = build_unit_cell(ObstacleShape::square(0.5)).unwrap();
        for n in 1..12 {
            let d = build_perforated_domain(1.0 / n as f64, sq, Rect::UNIT_SQUARE).unwrap();
            let sum: f64 = (0..d.cell_count())
                .map(|_| d.epsilon * d.epsilon * d.cell.fluid_area)
                .sum();
            assert!((sum - d.cell.theta * d.omega.area()).abs() < 1e-14);
        }
    }

    #[test]
    fn cell_centres_carry_obstacles() {
        let sq = build_unit_cell(ObstacleShape::square(0.5)).unwrap();
        let d = build_perforated_domain(0.25, sq, Rect::UNIT_SQUARE).unwrap();
        for &k in &d.cell_indices {
            let c = d.cell_center(k);
            assert!(d.in_obstacle(c));
            assert_eq!(d.cell_of(c), k);
        }
        // cell corners are fluid
        assert!(!d.in_obstacle([0.25, 0.25]));
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn kappa_recovers_cell(
                k1 in -50i64..50, k2 in -50i64..50,
                y1 in -0.5f64..0.5, y2 in -0.5f64..0.5,
                n in 1usize..20,
            ) {
                let eps = 1.0 / n as f64;
                // keep away from rounding at the upper face
                let y = [y1.min(0.499_999), y2.min(0.499_999)];
                let x = [eps * k1 as f64 + eps * y[0], eps * k2 as f64 + eps * y[1]];
                prop_assert_eq!(kappa(x, eps), [k1, k2]);
            }

            #[test]
            fn obstacle_count_is_n_squared(n in 1usize..24, side in 0.05f64..0.95) {
                let cell = build_unit_cell(ObstacleShape::square(side)).unwrap();
                let d = build_perforated_domain(1.0 / n as f64, cell, Rect::UNIT_SQUARE).unwrap();
                prop_assert_eq!(d.obstacle_count(), n * n);
            }
        }
    }
}
