//! Cell study: permeability tensors for a list of obstacles and spacings.

use std::path::PathBuf;

use rayon::prelude::*;
use thinpore_core::geometry::{build_unit_cell, ObstacleShape};
use thinpore_core::homogenization::{compute_permeability, CellStudy, RegimeKind};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::output::{num, write_fields, CsvTable};
use crate::HarnessError;

pub const CELL_COLUMNS: &[&str] = &[
    "shape",
    "size",
    "h",
    "layers",
    "a11",
    "a12",
    "a21",
    "a22",
    "eig_min",
    "eig_max",
    "symmetric",
    "spd",
    "cross_check",
    "fluid_volume",
    "staircase_perimeter",
    "analytic_perimeter",
    "residual",
];

#[derive(Debug, Clone)]
pub struct CellRow {
    pub shape: ObstacleShape,
    pub h: f64,
    pub study: CellStudy,
    /// Wall length of the cell mesh, per unit height.
    pub staircase_perimeter: f64,
    pub analytic_perimeter: f64,
}

impl CellRow {
    fn record(&self) -> Vec<String> {
        let t = &self.study.tensor;
        let a = t.entries;
        let eig = t.eigenvalues();
        let symmetric = t.asymmetry() <= thinpore_core::homogenization::ASYMMETRY_TOLERANCE * t.norm();
        vec![
            self.shape.kind_name().to_string(),
            num(self.shape.size()),
            num(self.h),
            t.layers.to_string(),
            num(a[0][0]),
            num(a[0][1]),
            num(a[1][0]),
            num(a[1][1]),
            num(eig[0]),
            num(eig[1]),
            symmetric.to_string(),
            t.is_positive_definite().to_string(),
            num(t.cross_check),
            num(t.fluid_volume),
            num(self.staircase_perimeter),
            num(self.analytic_perimeter),
            num(t.solver_residual),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct CellReport {
    pub rows: Vec<CellRow>,
    pub files: Vec<PathBuf>,
}

fn solve_case(config: &ExperimentConfig, shape: ObstacleShape, h: f64) -> Result<CellRow, HarnessError> {
    let cell = build_unit_cell(shape)?;
    let study = compute_permeability(&cell, h, config.cell_layers_for(h), config.delta)?;
    let residual = study.tensor.solver_residual;
    if !(residual <= config.tolerance) {
        return Err(HarnessError::Residual {
            residual,
            tolerance: config.tolerance,
        });
    }
    let measured = study.solutions[0].velocity.mesh().measured_cell();
    Ok(CellRow {
        shape,
        h,
        study,
        staircase_perimeter: measured.obstacle_perimeter,
        analytic_perimeter: cell.obstacle_perimeter,
    })
}

/// `cell`: one CSV row per (obstacle, h). Rows finished before a failure
/// are written before the error is returned.
pub fn run_cell_study(config: &ExperimentConfig) -> Result<CellReport, HarnessError> {
    config.expect_kind(ExperimentKind::Cell)?;
    let jobs: Vec<(ObstacleShape, f64)> = config
        .cases
        .iter()
        .flat_map(|&s| config.h.iter().map(move |&h| (s, h)))
        .collect();
    let results: Vec<Result<CellRow, HarnessError>> = crate::pool(config.workers)?
        .install(|| jobs.par_iter().map(|&(s, h)| solve_case(config, s, h)).collect());

    let dir = &config.output_dir;
    let mut table = CsvTable::create(dir, "permeability.csv", &config.hash(), CELL_COLUMNS)?;
    let mut files = vec![table.path().to_path_buf()];
    let mut rows = Vec::new();
    for result in results {
        let row = result?;
        table.row(RegimeKind::HighGamma.label(), &row.record())?;
        if config.vtk {
            let [w1, w2] = &row.study.solutions;
            let name = format!(
                "cell_{}_{}_h{}.vtk",
                row.shape.kind_name(),
                row.shape.size(),
                (1.0 / row.h).round()
            );
            files.push(write_fields(
                dir,
                &name,
                "cell problems",
                w1.velocity.mesh(),
                &[
                    ("w1", &w1.velocity),
                    ("q1", &w1.pressure),
                    ("w2", &w2.velocity),
                    ("q2", &w2.pressure),
                ],
            )?);
        }
        rows.push(row);
    }
    Ok(CellReport { rows, files })
}

/// Reads the permeability of the first row of a `permeability.csv`.
pub fn read_permeability(path: &std::path::Path) -> Result<[[f64; 2]; 2], HarnessError> {
    let bad = |m: String| HarnessError::PermeabilityFile(format!("{}: {m}", path.display()));
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("no column {name}")))
    };
    let idx = [col("a11")?, col("a12")?, col("a21")?, col("a22")?];
    let record = reader
        .records()
        .next()
        .ok_or_else(|| bad("no rows".into()))??;
    let mut v = [0.0; 4];
    for (k, &i) in idx.iter().enumerate() {
        v[k] = record[i]
            .parse()
            .map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?;
    }
    Ok([[v[0], v[1]], [v[2], v[3]]])
}
