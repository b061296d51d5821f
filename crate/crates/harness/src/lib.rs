//! Experiment harness around `thinpore-core`: configuration, orchestration of
//! cell studies, fine solves, scaling studies, unfolding checks and Darcy
//! tables, and their CSV/VTK output.

pub mod cell;
pub mod config;
pub mod darcy;
pub mod fine;
pub mod output;
pub mod scaling;
pub mod unfold;

use std::path::PathBuf;

use thinpore_core::discretization::MeshError;
use thinpore_core::geometry::GeometryError;
use thinpore_core::homogenization::HomogenizationError;
use thinpore_core::stokes::StokesError;
use thinpore_core::unfolding::UnfoldError;
use thiserror::Error;

pub use cell::run_cell_study;
pub use config::{ConfigError, ExperimentConfig, ExperimentKind};
pub use darcy::run_darcy;
pub use fine::run_fine_solve;
pub use scaling::run_scaling_study;
pub use unfold::run_unfold_check;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("config is for `{got}`, expected `{expected}`")]
    WrongKind {
        expected: ExperimentKind,
        got: ExperimentKind,
    },
    #[error("solver residual {residual:e} above tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },
    #[error("permeability file {0}")]
    PermeabilityFile(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Stokes(#[from] StokesError),
    #[error(transparent)]
    Homogenization(#[from] HomogenizationError),
    #[error(transparent)]
    Unfold(#[from] UnfoldError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

impl ExperimentConfig {
    pub(crate) fn expect_kind(&self, expected: ExperimentKind) -> Result<(), HarnessError> {
        if self.kind == expected {
            Ok(())
        } else {
            Err(HarnessError::WrongKind {
                expected,
                got: self.kind,
            })
        }
    }
}

pub(crate) fn pool(workers: usize) -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))
}

/// Files written by one run and a one-line summary.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: String,
    pub files: Vec<PathBuf>,
}

/// Runs the experiment selected by `config.kind`.
pub fn run(config: &ExperimentConfig) -> Result<RunOutcome, HarnessError> {
    match config.kind {
        ExperimentKind::Cell => {
            let r = run_cell_study(config)?;
            let summary = r
                .rows
                .iter()
                .map(|row| {
                    let a = row.study.tensor.entries;
                    format!(
                        "{} {} h={}: A = [[{:.6e}, {:.3e}], [{:.3e}, {:.6e}]]",
                        row.shape.kind_name(),
                        row.shape.size(),
                        row.h,
                        a[0][0],
                        a[0][1],
                        a[1][0],
                        a[1][1]
                    )
                })
                .collect::<Vec<_>>()
                .join("\n");
            Ok(RunOutcome { summary, files: r.files })
        }
        ExperimentKind::Fine => {
            let r = run_fine_solve(config)?;
            let m = &r.measurements;
            let summary = format!(
                "eps={} gamma={}: |u|={:.4e} |D u|={:.4e} |p|={:.4e} net flux={:.3e} identity={:.3e}",
                m.epsilon,
                m.gamma,
                m.velocity_l2,
                m.gradient_l2,
                m.pressure_l2,
                m.net_flux(),
                m.worst_identity()
            );
            Ok(RunOutcome { summary, files: r.files })
        }
        ExperimentKind::Scaling => {
            let r = run_scaling_study(config)?;
            let summary = r
                .summaries
                .iter()
                .map(|s| {
                    format!(
                        "gamma={} {}: s={} slope={:.3} spread={:.3} {}",
                        s.gamma,
                        s.quantity.name(),
                        s.exponent,
                        s.fitted_slope,
                        s.spread(),
                        if s.passed() { "bounded" } else { "unbounded" }
                    )
                })
                .collect::<Vec<_>>()
                .join("\n");
            Ok(RunOutcome { summary, files: r.files })
        }
        ExperimentKind::UnfoldCheck => {
            let r = run_unfold_check(config)?;
            let summary = format!(
                "{} checks, worst discrepancy {:e}, {}",
                r.rows.len(),
                r.worst(),
                if r.passed() { "all passed" } else { "FAILED" }
            );
            Ok(RunOutcome { summary, files: r.files })
        }
        ExperimentKind::Darcy => {
            let r = run_darcy(config)?;
            let summary = format!(
                "{} regime, {} samples, permeability {}",
                r.regime.kind,
                r.samples.len(),
                r.source.label()
            );
            Ok(RunOutcome { summary, files: r.files })
        }
    }
}
