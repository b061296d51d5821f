//! Single fine solves and the measurements taken from them.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thinpore_core::discretization::{vertical_average, Field};
use thinpore_core::geometry::BoundaryTag;
use thinpore_core::homogenization::classify_regime;
use thinpore_core::stokes::{
    boundary_flux, divergence_identity, solve_fine_problem, stabilization_form,
    velocity_gradient_pairing, DivergenceIdentity, FineProblem, FineSolution, FluxReport,
    RobinParameters,
};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::output::{num, write_fields, CsvTable};
use crate::HarnessError;

/// Relative tolerance of the divergence identity check.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-6;

/// Random test functions per fine solve.
pub const IDENTITY_SAMPLES: usize = 5;

/// Fine problem of `config` at one `(gamma, epsilon)`.
pub fn fine_problem(config: &ExperimentConfig, gamma: f64, epsilon: f64) -> FineProblem {
    let mut p = FineProblem::new(epsilon, config.unit_cell());
    p.subdivisions = config.subdivisions;
    p.layers = config.layers;
    p.mu = config.mu;
    p.delta = config.delta;
    p.f_prime = config.f_prime;
    p.scale_forcing = config.scale_forcing;
    p.robin = RobinParameters {
        alpha: config.alpha,
        gamma,
        g: config.g.forcing(),
    };
    p
}

#[derive(Debug, Clone)]
pub struct FineMeasurements {
    pub gamma: f64,
    pub epsilon: f64,
    pub h: f64,
    pub layers: usize,
    pub unknowns: usize,
    pub residual: f64,
    pub velocity_l2: f64,
    pub gradient_l2: f64,
    /// Mean-adjusted pressure norm.
    pub pressure_l2: f64,
    /// Obstacle flux; `None` without walls.
    pub flux: Option<FluxReport>,
    pub identities: Vec<DivergenceIdentity>,
    /// `(y3, u)` along the vertical line through the centre of `omega`.
    pub centre_profile: Vec<(f64, [f64; 3])>,
    /// Integral of the vertical average over `omega`.
    pub average_flow: [f64; 2],
}

impl FineMeasurements {
    pub fn worst_identity(&self) -> f64 {
        self.identities.iter().fold(0.0, |m, i| m.max(i.relative()))
    }

    /// `|defect - predicted defect| / scale`, worst over the samples.
    pub fn worst_model_mismatch(&self) -> f64 {
        self.identities.iter().fold(0.0, |m, i| {
            let r = if i.scale == 0.0 {
                0.0
            } else {
                (i.defect() - i.predicted_defect).abs() / i.scale
            };
            m.max(r)
        })
    }

    pub fn net_flux(&self) -> f64 {
        self.flux.as_ref().map_or(0.0, |f| f.net)
    }
}

/// Seeded scalar test function vanishing on every boundary part except the walls.
pub fn test_function(solution: &FineSolution, seed: u64, sample: usize) -> Field {
    let mesh = &solution.mesh;
    let mut fixed = vec![false; mesh.node_count()];
    for f in mesh.facets().iter().filter(|f| f.tag != BoundaryTag::Obstacle) {
        for n in mesh.facet_nodes(f) {
            fixed[n] = true;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample as u64);
    let values = fixed
        .iter()
        .map(|&b| {
            let v = rng.gen_range(-1.0..1.0);
            if b {
                0.0
            } else {
                v
            }
        })
        .collect();
    Field::from_values(mesh.clone(), 1, values)
}

fn identity(solution: &FineSolution, psi: &Field) -> Result<DivergenceIdentity, HarnessError> {
    if solution.mesh.has_tag(BoundaryTag::Obstacle) {
        return Ok(divergence_identity(
            &solution.system,
            &solution.solution,
            psi,
            BoundaryTag::Obstacle,
        )?);
    }
    let s = &solution.solution;
    let eps = solution.system.anisotropy().epsilon();
    let mut predicted =
        stabilization_form(&s.pressure, psi, solution.system.delta(), solution.system.mu());
    if let Some(lambda) = s.diagnostics.multiplier {
        predicted -= lambda * psi.integrate()[0];
    }
    Ok(DivergenceIdentity {
        lhs: velocity_gradient_pairing(&s.velocity, psi, eps),
        rhs: 0.0,
        scale: s.velocity.l2_norm() * psi.d_eps_norm(eps),
        predicted_defect: predicted,
    })
}

/// Solves `problem` and evaluates norms, fluxes and divergence identities.
pub fn measure(
    problem: &FineProblem,
    seed: u64,
    tolerance: f64,
) -> Result<(FineSolution, FineMeasurements), HarnessError> {
    let solution = solve_fine_problem(problem)?;
    let s = &solution.solution;
    let residual = s.diagnostics.relative_residual;
    if !(residual <= tolerance) {
        return Err(HarnessError::Residual { residual, tolerance });
    }
    let eps = problem.epsilon;
    let flux = if solution.mesh.has_tag(BoundaryTag::Obstacle) {
        Some(boundary_flux(&s.velocity, BoundaryTag::Obstacle)?)
    } else {
        None
    };
    let identities = (0..IDENTITY_SAMPLES)
        .map(|k| identity(&solution, &test_function(&solution, seed, k)))
        .collect::<Result<Vec<_>, _>>()?;
    let mesh = &solution.mesh;
    let [nx, ny, nz] = mesh.cells();
    let centre_profile = (0..=nz)
        .filter_map(|k| {
            let node = mesh.node_at([nx / 2, ny / 2, k])?;
            let u = s.velocity.node_values(node);
            Some((mesh.node_position(node)[2], [u[0], u[1], u[2]]))
        })
        .collect();
    let average = vertical_average(&s.velocity).field.integrate();
    let m = FineMeasurements {
        gamma: problem.robin.gamma,
        epsilon: eps,
        h: problem.horizontal_spacing(),
        layers: problem.layers,
        unknowns: s.diagnostics.unknowns,
        residual,
        velocity_l2: s.velocity.l2_norm(),
        gradient_l2: s.velocity.d_eps_norm(eps),
        pressure_l2: s.pressure.mean_adjusted_l2(),
        flux,
        identities,
        centre_profile,
        average_flow: [average[0], average[1]],
    };
    Ok((solution, m))
}

#[derive(Debug, Clone)]
pub struct FineReport {
    pub measurements: FineMeasurements,
    pub files: Vec<PathBuf>,
}

pub const FINE_COLUMNS: &[&str] = &[
    "gamma",
    "epsilon",
    "h",
    "layers",
    "unknowns",
    "residual",
    "u_l2",
    "du_l2",
    "p_l2",
    "net_flux",
    "absolute_flux",
    "max_obstacle_flux",
    "average_flow_1",
    "average_flow_2",
    "identity_worst",
];

pub const IDENTITY_COLUMNS: &[&str] = &[
    "gamma",
    "epsilon",
    "sample",
    "lhs",
    "rhs",
    "relative",
    "predicted_defect",
    "model_mismatch",
    "passed",
];

pub(crate) fn fine_row(m: &FineMeasurements) -> Vec<String> {
    let (net, abs, max) = match &m.flux {
        Some(f) => (f.net, f.absolute, f.max_obstacle_flux()),
        None => (0.0, 0.0, 0.0),
    };
    vec![
        num(m.gamma),
        num(m.epsilon),
        num(m.h),
        m.layers.to_string(),
        m.unknowns.to_string(),
        num(m.residual),
        num(m.velocity_l2),
        num(m.gradient_l2),
        num(m.pressure_l2),
        num(net),
        num(abs),
        num(max),
        num(m.average_flow[0]),
        num(m.average_flow[1]),
        num(m.worst_identity()),
    ]
}

pub(crate) fn identity_rows(m: &FineMeasurements) -> Vec<Vec<String>> {
    m.identities
        .iter()
        .enumerate()
        .map(|(k, id)| {
            let mismatch = if id.scale == 0.0 {
                0.0
            } else {
                (id.defect() - id.predicted_defect).abs() / id.scale
            };
            vec![
                num(m.gamma),
                num(m.epsilon),
                k.to_string(),
                num(id.lhs),
                num(id.rhs),
                num(id.relative()),
                num(id.predicted_defect),
                num(mismatch),
                (id.relative() <= DIVERGENCE_TOLERANCE).to_string(),
            ]
        })
        .collect()
}

/// `fine`: one solve, CSV of norms, fluxes, identities and the centre profile.
pub fn run_fine_solve(config: &ExperimentConfig) -> Result<FineReport, HarnessError> {
    config.expect_kind(ExperimentKind::Fine)?;
    let gamma = config.gamma[0];
    let regime = classify_regime(gamma).kind.label();
    let problem = fine_problem(config, gamma, config.epsilon[0]);
    let (solution, m) = measure(&problem, config.seed, config.tolerance)?;
    let dir = &config.output_dir;
    let hash = config.hash();

    let mut summary = CsvTable::create(dir, "fine.csv", &hash, FINE_COLUMNS)?;
    summary.row(regime, &fine_row(&m))?;
    let mut ids = CsvTable::create(dir, "identity.csv", &hash, IDENTITY_COLUMNS)?;
    for row in identity_rows(&m) {
        ids.row(regime, &row)?;
    }
    let mut flux = CsvTable::create(dir, "obstacle_flux.csv", &hash, &["obstacle", "net_flux"])?;
    if let Some(f) = &m.flux {
        for (k, v) in f.per_obstacle.iter().enumerate() {
            flux.row(regime, &[k.to_string(), num(*v)])?;
        }
    }
    let mut profile = CsvTable::create(dir, "profile.csv", &hash, &["y3", "u1", "u2", "u3"])?;
    for (y, u) in &m.centre_profile {
        profile.row(regime, &[num(*y), num(u[0]), num(u[1]), num(u[2])])?;
    }
    let mut files = vec![
        summary.path().to_path_buf(),
        ids.path().to_path_buf(),
        flux.path().to_path_buf(),
        profile.path().to_path_buf(),
    ];
    if config.vtk {
        let s = &solution.solution;
        files.push(write_fields(
            dir,
            "fine.vtk",
            "fine solve",
            &solution.mesh,
            &[("velocity", &s.velocity), ("pressure", &s.pressure)],
        )?);
        let avg = vertical_average(&s.velocity).field;
        files.push(write_fields(
            dir,
            "fine_average.vtk",
            "vertical average",
            avg.mesh(),
            &[("average_velocity", &avg)],
        )?);
    }
    Ok(FineReport {
        measurements: m,
        files,
    })
}
