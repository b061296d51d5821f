//! Scaling study: a-priori bounds `||.|| <= C eps^s` checked through the
//! boundedness of `r(eps) = ||.|| eps^{-s}` over a list of `eps`.

use std::path::PathBuf;

use rayon::prelude::*;
use thinpore_core::homogenization::{classify_regime, Regime};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::fine::{fine_problem, fine_row, identity_rows, measure, FineMeasurements, FINE_COLUMNS, IDENTITY_COLUMNS};
use crate::output::{num, CsvTable};
use crate::HarnessError;

/// Largest accepted `max r / min r` over the `eps` list.
pub const RATIO_SPREAD_LIMIT: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Velocity,
    Gradient,
    Pressure,
}

impl Quantity {
    pub const ALL: [Quantity; 3] = [Quantity::Velocity, Quantity::Gradient, Quantity::Pressure];

    pub fn name(&self) -> &'static str {
        match self {
            Quantity::Velocity => "u_l2",
            Quantity::Gradient => "du_l2",
            Quantity::Pressure => "p_l2",
        }
    }

    pub fn exponent(&self, regime: &Regime) -> f64 {
        match self {
            Quantity::Velocity => regime.velocity_exponent,
            Quantity::Gradient => regime.gradient_exponent,
            Quantity::Pressure => regime.pressure_exponent,
        }
    }

    pub fn of(&self, m: &FineMeasurements) -> f64 {
        match self {
            Quantity::Velocity => m.velocity_l2,
            Quantity::Gradient => m.gradient_l2,
            Quantity::Pressure => m.pressure_l2,
        }
    }
}

/// One `(gamma, eps)` solve, or the error that stopped it.
#[derive(Debug, Clone)]
pub struct ScalingRun {
    pub gamma: f64,
    pub epsilon: f64,
    pub outcome: Result<FineMeasurements, String>,
}

/// Boundedness of one quantity at one `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioSummary {
    pub gamma: f64,
    pub quantity: Quantity,
    pub exponent: f64,
    /// Least-squares slope of `log norm` against `log eps`.
    pub fitted_slope: f64,
    /// `r(eps)` in the order of the `eps` list; `None` for failed runs.
    pub ratios: Vec<Option<f64>>,
}

impl RatioSummary {
    pub fn spread(&self) -> f64 {
        let r: Vec<f64> = self.ratios.iter().flatten().copied().collect();
        if r.len() != self.ratios.len() || r.is_empty() {
            return f64::INFINITY;
        }
        let max = r.iter().copied().fold(f64::MIN, f64::max);
        let min = r.iter().copied().fold(f64::MAX, f64::min);
        max / min
    }

    pub fn passed(&self) -> bool {
        self.spread() <= RATIO_SPREAD_LIMIT
    }
}

#[derive(Debug, Clone)]
pub struct ScalingReport {
    pub runs: Vec<ScalingRun>,
    pub summaries: Vec<RatioSummary>,
    pub files: Vec<PathBuf>,
}

impl ScalingReport {
    pub fn passed(&self) -> bool {
        self.summaries.iter().all(RatioSummary::passed)
    }

    pub fn measurements(&self) -> impl Iterator<Item = &FineMeasurements> {
        self.runs.iter().filter_map(|r| r.outcome.as_ref().ok())
    }
}

/// Slope of the least-squares line through `(x, y)`.
pub fn fitted_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn summarize(gamma: f64, runs: &[&ScalingRun]) -> Vec<RatioSummary> {
    let regime = classify_regime(gamma);
    Quantity::ALL
        .iter()
        .map(|&q| {
            let s = q.exponent(&regime);
            let ratios = runs
                .iter()
                .map(|r| r.outcome.as_ref().ok().map(|m| q.of(m) * r.epsilon.powf(-s)))
                .collect();
            let (x, y): (Vec<f64>, Vec<f64>) = runs
                .iter()
                .filter_map(|r| r.outcome.as_ref().ok().map(|m| (r.epsilon.ln(), q.of(m).ln())))
                .unzip();
            let fitted_slope = if x.len() >= 2 { fitted_slope(&x, &y) } else { f64::NAN };
            RatioSummary {
                gamma,
                quantity: q,
                exponent: s,
                fitted_slope,
                ratios,
            }
        })
        .collect()
}

/// `scaling`: every `(gamma, eps)` pair solved, failures kept as rows.
pub fn run_scaling_study(config: &ExperimentConfig) -> Result<ScalingReport, HarnessError> {
    config.expect_kind(ExperimentKind::Scaling)?;
    let jobs: Vec<(f64, f64)> = config
        .gamma
        .iter()
        .flat_map(|&g| config.epsilon.iter().map(move |&e| (g, e)))
        .collect();
    let runs: Vec<ScalingRun> = crate::pool(config.workers)?.install(|| {
        jobs.par_iter()
            .map(|&(gamma, epsilon)| {
                let problem = fine_problem(config, gamma, epsilon);
                let outcome = measure(&problem, config.seed, config.tolerance)
                    .map(|(_, m)| m)
                    .map_err(|e| e.to_string());
                ScalingRun {
                    gamma,
                    epsilon,
                    outcome,
                }
            })
            .collect()
    });
    let mut summaries = Vec::new();
    for &gamma in &config.gamma {
        let of_gamma: Vec<&ScalingRun> = runs.iter().filter(|r| r.gamma == gamma).collect();
        summaries.extend(summarize(gamma, &of_gamma));
    }

    let dir = &config.output_dir;
    let hash = config.hash();
    let mut columns = vec!["status"];
    columns.extend_from_slice(FINE_COLUMNS);
    let mut table = CsvTable::create(dir, "scaling.csv", &hash, &columns)?;
    let mut ids = CsvTable::create(dir, "identity.csv", &hash, IDENTITY_COLUMNS)?;
    for run in &runs {
        let regime = classify_regime(run.gamma).kind.label();
        match &run.outcome {
            Ok(m) => {
                let mut row = vec!["ok".to_string()];
                row.extend(fine_row(m));
                table.row(regime, &row)?;
                for r in identity_rows(m) {
                    ids.row(regime, &r)?;
                }
            }
            Err(e) => {
                let mut row = vec![format!("failed: {e}"), num(run.gamma), num(run.epsilon)];
                row.resize(columns.len(), String::new());
                table.row(regime, &row)?;
            }
        }
    }
    let mut summary = CsvTable::create(
        dir,
        "scaling_summary.csv",
        &hash,
        &["gamma", "quantity", "exponent", "fitted_slope", "ratio_min", "ratio_max", "spread", "passed"],
    )?;
    for s in &summaries {
        let r: Vec<f64> = s.ratios.iter().flatten().copied().collect();
        let min = r.iter().copied().fold(f64::INFINITY, f64::min);
        let max = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        summary.row(
            classify_regime(s.gamma).kind.label(),
            &[
                num(s.gamma),
                s.quantity.name().to_string(),
                num(s.exponent),
                num(s.fitted_slope),
                num(min),
                num(max),
                num(s.spread()),
                s.passed().to_string(),
            ],
        )?;
    }
    let files = vec![
        table.path().to_path_buf(),
        ids.path().to_path_buf(),
        summary.path().to_path_buf(),
    ];
    Ok(ScalingReport {
        runs,
        summaries,
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_power_law() {
        let x: Vec<f64> = [0.25f64, 0.125, 0.0625].iter().map(|e| e.ln()).collect();
        let y: Vec<f64> = [0.25f64, 0.125, 0.0625].iter().map(|e| (3.0 * e * e).ln()).collect();
        assert!((fitted_slope(&x, &y) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn failed_runs_fail_the_summary() {
        let s = RatioSummary {
            gamma: 0.0,
            quantity: Quantity::Velocity,
            exponent: 0.0,
            fitted_slope: 0.0,
            ratios: vec![Some(1.0), None, Some(2.0)],
        };
        assert!(!s.passed());
        let ok = RatioSummary {
            ratios: vec![Some(1.0), Some(3.9), Some(2.0)],
            ..s
        };
        assert!(ok.passed());
    }
}
