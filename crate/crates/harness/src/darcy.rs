//! Tabulation of the effective Darcy laws over pressure-gradient samples.

use std::path::PathBuf;
use std::sync::Arc;

use thinpore_core::discretization::{FacetField, Mesh};
use thinpore_core::geometry::BoundaryTag;
use thinpore_core::homogenization::{
    classify_regime, compute_permeability, effective_velocity_field, EffectiveInputs, Regime,
    RegimeKind,
};
use thinpore_core::unfolding::{boundary_average, BoundaryRegion};

use crate::cell::read_permeability;
use crate::config::{ExperimentConfig, ExperimentKind, SurfaceSpec};
use crate::output::{num, CsvTable};
use crate::HarnessError;

type Tensor = [[f64; 2]; 2];

/// Where the permeability of a high-gamma table came from.
#[derive(Debug, Clone, PartialEq)]
pub enum PermeabilitySource {
    NotNeeded,
    Config,
    File(PathBuf),
    Computed { h: f64 },
}

impl PermeabilitySource {
    pub fn label(&self) -> String {
        match self {
            PermeabilitySource::NotNeeded => "none".into(),
            PermeabilitySource::Config => "config".into(),
            PermeabilitySource::File(p) => format!("file:{}", p.display()),
            PermeabilitySource::Computed { h } => format!("cell-study:h={}", num(*h)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DarcyReport {
    pub regime: Regime,
    pub inputs: EffectiveInputs,
    pub source: PermeabilitySource,
    pub samples: Vec<([f64; 2], [f64; 3])>,
    pub files: Vec<PathBuf>,
}

/// Wall mean of the configured `g'` on the unit cell.
pub fn wall_mean(config: &ExperimentConfig) -> Result<[f64; 2], HarnessError> {
    let cell = config.unit_cell();
    match config.g {
        SurfaceSpec::Constant(g) => Ok(g),
        SurfaceSpec::Table(_) if !cell.has_obstacle() => Ok([0.0; 2]),
        spec @ SurfaceSpec::Table(_) => {
            let h = config.h[0];
            let mesh = Arc::new(Mesh::unit_cell(&cell, h, Some(1), false)?);
            let g = spec.forcing();
            let data = FacetField::from_facet_fn(mesh.clone(), BoundaryTag::Obstacle, 2, |f, x| {
                let (_, y) = mesh.micro_coordinate([x[0], x[1]]);
                g.evaluate(f, y).to_vec()
            });
            let m = boundary_average(&data, BoundaryRegion::All)?;
            Ok([m[0], m[1]])
        }
    }
}

fn permeability(
    config: &ExperimentConfig,
    regime: &Regime,
) -> Result<(Option<Tensor>, PermeabilitySource), HarnessError> {
    if regime.kind != RegimeKind::HighGamma {
        return Ok((None, PermeabilitySource::NotNeeded));
    }
    if let Some(a) = config.permeability {
        return Ok((Some(a), PermeabilitySource::Config));
    }
    if let Some(path) = &config.permeability_file {
        return Ok((Some(read_permeability(path)?), PermeabilitySource::File(path.clone())));
    }
    let h = config.h[0];
    let study = compute_permeability(&config.unit_cell(), h, config.cell_layers_for(h), config.delta)?;
    Ok((Some(study.tensor.entries), PermeabilitySource::Computed { h }))
}

/// `darcy`: `v~'` for every configured `grad p~` sample.
pub fn run_darcy(config: &ExperimentConfig) -> Result<DarcyReport, HarnessError> {
    config.expect_kind(ExperimentKind::Darcy)?;
    let regime = classify_regime(config.gamma[0]);
    let cell = config.unit_cell();
    let (permeability, source) = permeability(config, &regime)?;
    let inputs = EffectiveInputs {
        theta: cell.theta,
        mu1: cell.mu1,
        alpha: config.alpha,
        mu: config.mu,
        grad_p: [0.0; 2],
        f_prime: config.f_prime,
        g_mean: wall_mean(config)?,
        permeability,
    };
    let v = effective_velocity_field(&regime, &inputs, &config.grad_p)?;
    let samples: Vec<_> = config.grad_p.iter().copied().zip(v).collect();

    let mut table = CsvTable::create(
        &config.output_dir,
        "darcy.csv",
        &config.hash(),
        &["gamma", "grad_p1", "grad_p2", "v1", "v2", "v3", "permeability"],
    )?;
    let source_label = source.label();
    for (g, v) in &samples {
        table.row(
            regime.kind.label(),
            &[
                num(regime.gamma),
                num(g[0]),
                num(g[1]),
                num(v[0]),
                num(v[1]),
                num(v[2]),
                source_label.clone(),
            ],
        )?;
    }
    Ok(DarcyReport {
        regime,
        inputs,
        source,
        samples,
        files: vec![table.path().to_path_buf()],
    })
}
