//! `bridgekit limits`: `ε·A^ε(μ0, μ1)` against `W2²(μ0, μ1)/2` along a
//! decreasing sequence of `ε`.

use std::path::{Path, PathBuf};

use bridgekit_core::measures::{wasserstein2_gaussian, GaussianMeasure};
use bridgekit_core::sinkhorn::solve_schrodinger_system;
use bridgekit_core::Error as CoreError;

use crate::config::ProblemConfig;
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, write_numeric_csv, write_svg, Panel, Series, Stroke};

pub const LIMITS_HEADER: [&str; 4] = ["epsilon", "scaled_cost", "target", "abs_error"];
pub const DEFAULT_EPSILONS: [f64; 5] = [1.0, 0.5, 0.2, 0.1, 0.05];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitRow {
    pub epsilon: f64,
    /// `None` when the solver did not converge.
    pub scaled_cost: Option<f64>,
    pub target: f64,
}

impl LimitRow {
    pub fn abs_error(&self) -> Option<f64> {
        self.scaled_cost.map(|c| (c - self.target).abs())
    }
}

#[derive(Debug, Clone)]
pub struct LimitsOutcome {
    pub rows: Vec<LimitRow>,
    pub csv: PathBuf,
    pub svg: PathBuf,
}

pub fn check_epsilons(epsilons: &[f64]) -> CliResult<()> {
    if epsilons.is_empty() {
        return Err(CliError::Argument("--eps needs at least one value".into()));
    }
    if let Some(e) = epsilons.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(CliError::Argument(format!("ε values must be positive, got {e}")));
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CliError::Argument("ε values must be strictly decreasing".into()));
    }
    Ok(())
}

/// Solves each row; non-convergence is recorded in the row, other errors abort.
pub fn sweep(cfg: &ProblemConfig, epsilons: &[f64]) -> CliResult<Vec<LimitRow>> {
    check_epsilons(epsilons)?;
    let (mu0, mu1) = cfg.marginals()?;
    let target = 0.5 * wasserstein2_gaussian(&GaussianMeasure::new(cfg.x0, 1.0)?, &GaussianMeasure::new(cfg.x1, 1.0)?);
    epsilons
        .iter()
        .map(|&epsilon| {
            let model = cfg.model_for(cfg.kernel, epsilon)?;
            let scaled_cost = match solve_schrodinger_system(&model, &mu0, &mu1, cfg.solver_options()) {
                Ok(sol) => Some(sol.cost_scaled()),
                Err(CoreError::NonConvergence { iterations, marginal_error }) => {
                    eprintln!("ε = {epsilon}: no convergence after {iterations} iterations (error {marginal_error:e})");
                    None
                }
                Err(e) => return Err(e.into()),
            };
            Ok(LimitRow { epsilon, scaled_cost, target })
        })
        .collect()
}

/// Index of the first row whose error fails to drop below its predecessor's.
pub fn trend_violation(rows: &[LimitRow]) -> Option<usize> {
    let errors: Vec<(usize, f64)> =
        rows.iter().enumerate().filter_map(|(i, r)| r.abs_error().map(|e| (i, e))).collect();
    errors.windows(2).find(|w| w[1].1 >= w[0].1).map(|w| w[1].0)
}

/// Writes `limits.csv` and `limits.svg`, then reports non-convergence
/// (exit 3) before a broken trend (exit 1).
pub fn cmd_limits(cfg: &ProblemConfig, epsilons: &[f64], out: &Path) -> CliResult<LimitsOutcome> {
    ensure_dir(out)?;
    let rows = sweep(cfg, epsilons)?;
    let table: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| vec![r.epsilon, r.scaled_cost.unwrap_or(f64::NAN), r.target, r.abs_error().unwrap_or(f64::NAN)])
        .collect();
    let csv = write_numeric_csv(&out.join("limits.csv"), &LIMITS_HEADER, &table)?;
    let panel = Panel {
        title: format!("Scaled entropic cost against ε, target W2²/2 = {}", rows[0].target),
        series: vec![
            Series {
                label: "ε·A".into(),
                stroke: Stroke::Solid,
                points: rows.iter().filter_map(|r| r.scaled_cost.map(|c| (r.epsilon, c))).collect(),
            },
            Series {
                label: "W2²/2".into(),
                stroke: Stroke::Dashed,
                points: rows.iter().map(|r| (r.epsilon, r.target)).collect(),
            },
        ],
    };
    let svg = write_svg(&out.join("limits.svg"), &[panel])?;

    if let Some(r) = rows.iter().find(|r| r.scaled_cost.is_none()) {
        return Err(CliError::SweepNonConvergence { epsilon: r.epsilon });
    }
    if let Some(i) = trend_violation(&rows) {
        return Err(CliError::Assertion(format!("error does not decrease at ε = {}", rows[i].epsilon)));
    }
    Ok(LimitsOutcome { rows, csv, svg })
}
