//! Unfolding identities on seeded random fields.

use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thinpore_core::discretization::{FacetField, Field, Mesh};
use thinpore_core::geometry::{build_perforated_domain, BoundaryTag, Rect};
use thinpore_core::stokes::SurfaceForcing;
use thinpore_core::unfolding::{
    verify_boundary_identity, verify_unfolding_identities, IdentityCheck, UnfoldingMap,
};

use crate::config::{ExperimentConfig, ExperimentKind, SurfaceSpec};
use crate::output::{num, CsvTable};
use crate::HarnessError;

/// Regime label of rows that do not depend on `gamma`.
pub const NO_REGIME: &str = "none";

#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldRow {
    /// `random-<k>`, `constant` or `surface-g`.
    pub field: String,
    pub epsilon: f64,
    pub check: IdentityCheck,
}

#[derive(Debug, Clone)]
pub struct UnfoldReport {
    pub rows: Vec<UnfoldRow>,
    pub files: Vec<PathBuf>,
}

impl UnfoldReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.check.passed())
    }

    pub fn worst(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.check.discrepancy()))
    }
}

/// Perforated layer of `config` at `epsilon`.
pub fn unfold_mesh(config: &ExperimentConfig, epsilon: f64) -> Result<Arc<Mesh>, HarnessError> {
    let domain = build_perforated_domain(epsilon, config.unit_cell(), Rect::UNIT_SQUARE)?;
    let h = epsilon / config.unfold_subdivisions as f64;
    Ok(Arc::new(Mesh::perforated(&domain, h, config.unfold_layers)?))
}

/// Three-component nodal field with entries uniform in `[-1, 1)`.
pub fn random_field(mesh: Arc<Mesh>, seed: u64, stream: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let values = (0..3 * mesh.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Field::from_values(mesh, 3, values)
}

/// Surface data of the check: the configured `g`, or a smooth periodic
/// micro function when the configured one vanishes.
fn surface_data(config: &ExperimentConfig) -> SurfaceForcing {
    match config.g {
        SurfaceSpec::Constant([0.0, 0.0]) => {
            SurfaceForcing::micro(|y| [(2.0 * PI * y[0]).sin() + y[1], 1.0 + y[0] * y[1]])
        }
        spec => spec.forcing(),
    }
}

/// `unfold-check`: volume, gradient and boundary identities for
/// `unfold.fields` random fields, a constant and the surface data, at every
/// `eps` and `p`.
pub fn run_unfold_check(config: &ExperimentConfig) -> Result<UnfoldReport, HarnessError> {
    config.expect_kind(ExperimentKind::UnfoldCheck)?;
    let g = surface_data(config);
    let mut rows = Vec::new();
    for (ei, &epsilon) in config.epsilon.iter().enumerate() {
        let mesh = unfold_mesh(config, epsilon)?;
        let map = UnfoldingMap::new(mesh.clone())?;
        let mut push = |field: String, checks: Vec<IdentityCheck>| {
            rows.extend(checks.into_iter().map(|check| UnfoldRow {
                field: field.clone(),
                epsilon,
                check,
            }))
        };
        for k in 0..config.fields {
            let stream = (ei * config.fields + k) as u64;
            let v = random_field(mesh.clone(), config.seed, stream);
            let report = verify_unfolding_identities(&map, &v, &config.exponents)?;
            push(format!("random-{k}"), report.checks);
        }
        let c = Field::constant(mesh.clone(), &[1.5, -2.0, 0.25]);
        push("constant".into(), verify_unfolding_identities(&map, &c, &config.exponents)?.checks);
        if mesh.has_tag(BoundaryTag::Obstacle) {
            let data = FacetField::from_facet_fn(mesh.clone(), BoundaryTag::Obstacle, 2, |f, x| {
                let (_, y) = mesh.micro_coordinate([x[0], x[1]]);
                g.evaluate(f, y).to_vec()
            });
            push(
                "surface-g".into(),
                verify_boundary_identity(&map, &data, &config.exponents)?.checks,
            );
        }
    }

    let mut table = CsvTable::create(
        &config.output_dir,
        "unfolding.csv",
        &config.hash(),
        &["field", "identity", "epsilon", "p", "unfolded", "predicted", "discrepancy", "passed"],
    )?;
    for r in &rows {
        table.row(
            NO_REGIME,
            &[
                r.field.clone(),
                r.check.identity.name().to_string(),
                num(r.epsilon),
                num(r.check.p),
                num(r.check.unfolded),
                num(r.check.predicted),
                num(r.check.discrepancy()),
                r.check.passed().to_string(),
            ],
        )?;
    }
    Ok(UnfoldReport {
        rows,
        files: vec![table.path().to_path_buf()],
    })
}
