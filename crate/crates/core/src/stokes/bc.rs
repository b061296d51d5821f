//! Boundary conditions and data of the Stokes problems.

use std::fmt;
use std::sync::Arc;

use crate::discretization::{Facet, Side};

/// Data prescribed on one boundary tag.
#[derive(Debug, Clone)]
pub enum BoundaryCondition {
    /// Prescribed velocity.
    Dirichlet([f64; 3]),
    /// The tag is identified with its opposite face by the mesh.
    Periodic,
    /// Natural condition entering the weak form as `coefficient int u.phi`
    /// plus the surface load `int g.phi`.
    NaturalRobin {
        coefficient: f64,
        forcing: SurfaceForcing,
    },
}

impl BoundaryCondition {
    pub fn no_slip() -> Self {
        BoundaryCondition::Dirichlet([0.0; 3])
    }

    /// Homogeneous natural ("do nothing") condition.
    pub fn free() -> Self {
        BoundaryCondition::NaturalRobin {
            coefficient: 0.0,
            forcing: SurfaceForcing::Zero,
        }
    }
}

/// One condition per boundary tag.
#[derive(Debug, Clone)]
pub struct BoundaryConditionSpec {
    pub exterior: BoundaryCondition,
    pub obstacle: BoundaryCondition,
    pub top: BoundaryCondition,
    pub bottom: BoundaryCondition,
}

/// `alpha eps^gamma` slip coefficient and surface forcing `g'` on the cylinders.
#[derive(Debug, Clone)]
pub struct RobinParameters {
    pub alpha: f64,
    pub gamma: f64,
    pub g: SurfaceForcing,
}

impl RobinParameters {
    pub fn coefficient(&self, epsilon: f64) -> f64 {
        self.alpha * epsilon.powf(self.gamma)
    }
}

impl BoundaryConditionSpec {
    /// No slip on the exterior and on `y3 in {0,1}`, slip on the cylinders.
    pub fn fine_problem(robin: &RobinParameters, epsilon: f64) -> Self {
        BoundaryConditionSpec {
            exterior: BoundaryCondition::no_slip(),
            obstacle: BoundaryCondition::NaturalRobin {
                coefficient: robin.coefficient(epsilon),
                forcing: robin.g.clone(),
            },
            top: BoundaryCondition::no_slip(),
            bottom: BoundaryCondition::no_slip(),
        }
    }

    /// Periodic lateral faces, no slip on `y3 in {0,1}`, free obstacle walls.
    pub fn cell_problem() -> Self {
        BoundaryConditionSpec {
            exterior: BoundaryCondition::Periodic,
            obstacle: BoundaryCondition::free(),
            top: BoundaryCondition::no_slip(),
            bottom: BoundaryCondition::no_slip(),
        }
    }

    /// No slip everywhere.
    pub fn closed() -> Self {
        BoundaryConditionSpec {
            exterior: BoundaryCondition::no_slip(),
            obstacle: BoundaryCondition::no_slip(),
            top: BoundaryCondition::no_slip(),
            bottom: BoundaryCondition::no_slip(),
        }
    }
}

/// Which face of a square obstacle a wall facet lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObstacleFace {
    XLo,
    XHi,
    YLo,
    YHi,
}

impl ObstacleFace {
    pub const ALL: [ObstacleFace; 4] = [
        ObstacleFace::XLo,
        ObstacleFace::XHi,
        ObstacleFace::YLo,
        ObstacleFace::YHi,
    ];

    /// The obstacle face touched by a wall facet. The fluid element sits on the
    /// opposite side, so a facet on the element's `Hi` side along `x1` is the
    /// obstacle's `XLo` face.
    pub fn of_facet(f: &Facet) -> ObstacleFace {
        match (f.axis, f.side) {
            (0, Side::Hi) => ObstacleFace::XLo,
            (0, Side::Lo) => ObstacleFace::XHi,
            (_, Side::Hi) => ObstacleFace::YLo,
            (_, Side::Lo) => ObstacleFace::YHi,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ObstacleFace::XLo => "xlo",
            ObstacleFace::XHi => "xhi",
            ObstacleFace::YLo => "ylo",
            ObstacleFace::YHi => "yhi",
        }
    }

    pub fn parse(s: &str) -> Option<ObstacleFace> {
        ObstacleFace::ALL.into_iter().find(|f| f.name() == s)
    }
}

/// Per-face horizontal surface forcing.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FaceTable {
    pub xlo: [f64; 2],
    pub xhi: [f64; 2],
    pub ylo: [f64; 2],
    pub yhi: [f64; 2],
}

impl FaceTable {
    pub fn get(&self, face: ObstacleFace) -> [f64; 2] {
        match face {
            ObstacleFace::XLo => self.xlo,
            ObstacleFace::XHi => self.xhi,
            ObstacleFace::YLo => self.ylo,
            ObstacleFace::YHi => self.yhi,
        }
    }

    pub fn set(&mut self, face: ObstacleFace, v: [f64; 2]) {
        match face {
            ObstacleFace::XLo => self.xlo = v,
            ObstacleFace::XHi => self.xhi = v,
            ObstacleFace::YLo => self.ylo = v,
            ObstacleFace::YHi => self.yhi = v,
        }
    }
}

type MicroFn = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

/// Surface forcing `g'` on the cylinder walls; `g3 = 0` always and `g` does
/// not depend on `y3`. Every variant is evaluated once per wall facet.
#[derive(Clone)]
pub enum SurfaceForcing {
    Zero,
    Constant([f64; 2]),
    /// Face-wise constant table (for staircase walls the face follows the facet normal).
    Table(FaceTable),
    /// `g(y')` of the micro coordinate `y' in Y'`, i.e. `g_eps(x') = g(x'/eps)`.
    Micro(MicroFn),
}

impl fmt::Debug for SurfaceForcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SurfaceForcing::Zero => write!(f, "Zero"),
            SurfaceForcing::Constant(g) => write!(f, "Constant({g:?})"),
            SurfaceForcing::Table(t) => write!(f, "Table({t:?})"),
            SurfaceForcing::Micro(_) => write!(f, "Micro(..)"),
        }
    }
}

impl SurfaceForcing {
    pub fn micro(g: impl Fn([f64; 2]) -> [f64; 2] + Send + Sync + 'static) -> Self {
        SurfaceForcing::Micro(Arc::new(g))
    }

    /// Value on a wall facet whose centre has micro coordinate `y`.
    pub fn evaluate(&self, facet: &Facet, y: [f64; 2]) -> [f64; 2] {
        match self {
            SurfaceForcing::Zero => [0.0; 2],
            SurfaceForcing::Constant(g) => *g,
            SurfaceForcing::Table(t) => t.get(ObstacleFace::of_facet(facet)),
            SurfaceForcing::Micro(g) => g(y),
        }
    }

    pub fn scaled(&self, c: f64) -> SurfaceForcing {
        match self {
            SurfaceForcing::Zero => SurfaceForcing::Zero,
            SurfaceForcing::Constant(g) => SurfaceForcing::Constant([c * g[0], c * g[1]]),
            SurfaceForcing::Table(t) => {
                let mut out = *t;
                for face in ObstacleFace::ALL {
                    let v = t.get(face);
                    out.set(face, [c * v[0], c * v[1]]);
                }
                SurfaceForcing::Table(out)
            }
            SurfaceForcing::Micro(g) => {
                let g = g.clone();
                SurfaceForcing::micro(move |y| {
                    let v = g(y);
                    [c * v[0], c * v[1]]
                })
            }
        }
    }
}

type VolumeFn = Arc<dyn Fn([f64; 3]) -> [f64; 3] + Send + Sync>;

/// Volume forcing, interpolated at the nodes.
#[derive(Clone)]
pub enum VolumeForcing {
    Zero,
    Constant([f64; 3]),
    Function(VolumeFn),
}

impl fmt::Debug for VolumeForcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VolumeForcing::Zero => write!(f, "Zero"),
            VolumeForcing::Constant(v) => write!(f, "Constant({v:?})"),
            VolumeForcing::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl VolumeForcing {
    pub fn function(f: impl Fn([f64; 3]) -> [f64; 3] + Send + Sync + 'static) -> Self {
        VolumeForcing::Function(Arc::new(f))
    }

    pub fn at(&self, x: [f64; 3]) -> [f64; 3] {
        match self {
            VolumeForcing::Zero => [0.0; 3],
            VolumeForcing::Constant(v) => *v,
            VolumeForcing::Function(f) => f(x),
        }
    }

    pub fn scaled(&self, c: f64) -> VolumeForcing {
        match self {
            VolumeForcing::Zero => VolumeForcing::Zero,
            VolumeForcing::Constant(v) => VolumeForcing::Constant([c * v[0], c * v[1], c * v[2]]),
            VolumeForcing::Function(f) => {
                let f = f.clone();
                VolumeForcing::function(move |x| {
                    let v = f(x);
                    [c * v[0], c * v[1], c * v[2]]
                })
            }
        }
    }
}
