//! `bridgekit verify`: duality, decomposition and contraction suites.

use std::path::Path;
use std::str::FromStr;

use bridgekit_core::contraction::{
    check_commutation, check_commutation_dimensional, check_entropic_contraction,
    check_entropic_contraction_dimensional, check_wasserstein_contraction, check_wasserstein_dimensional,
    contraction_schedule, test_functions, InequalityCheck,
};
use bridgekit_core::dual::{dual_functional, optimal_potential, random_candidates};
use bridgekit_core::dynamics::{
    build_path, continuity_residual, cost_lower_bound, forward_action, symmetric_decomposition, uniform_times,
    velocity_cross_term, ContinuityForm, PathSource,
};
use bridgekit_core::gaussian_bridge::{dual_potential, BridgeParams};
use bridgekit_core::measures::{relative_entropy, wasserstein2_gaussian, GaussianMeasure};
use bridgekit_core::sinkhorn::solve_schrodinger_system;
use bridgekit_core::{Grid, GridFunction, Potential};

use crate::config::ProblemConfig;
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, fmt_num, write_csv};

pub const REPORT_HEADER: [&str; 6] = ["check", "lhs", "rhs", "slack", "tolerance", "pass"];

/// Sample grid for the contraction checks.
pub const CONTRACTION_TIMES: [f64; 3] = [0.25, 0.5, 1.0];
pub const WEAK_DUALITY_SAMPLES: usize = 50;
pub const WEAK_DUALITY_SEED: u64 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Duality,
    Decomposition,
    Contraction,
    All,
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "duality" => Ok(Self::Duality),
            "decomposition" => Ok(Self::Decomposition),
            "contraction" => Ok(Self::Contraction),
            "all" => Ok(Self::All),
            _ => Err(format!("unknown suite `{s}` (duality, decomposition, contraction, all)")),
        }
    }
}

/// One line of the report. `slack ≥ -tolerance` passes.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tolerance: f64,
}

impl CheckRow {
    /// `lhs ≤ rhs`.
    pub fn at_most(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self { name: name.into(), lhs, rhs, slack: rhs - lhs, tolerance }
    }

    /// `lhs = rhs`; the slack is `-|lhs - rhs|`.
    pub fn equal(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self { name: name.into(), lhs, rhs, slack: -(lhs - rhs).abs(), tolerance }
    }

    pub fn from_check(name: impl Into<String>, c: &InequalityCheck) -> Self {
        Self::at_most(name, c.lhs, c.rhs, c.tolerance)
    }

    pub fn passes(&self) -> bool {
        self.slack >= -self.tolerance
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.name.clone(),
            fmt_num(self.lhs),
            fmt_num(self.rhs),
            fmt_num(self.slack),
            fmt_num(self.tolerance),
            if self.passes() { "pass" } else { "fail" }.to_owned(),
        ]
    }
}

pub fn run_suite(cfg: &ProblemConfig, suite: Suite) -> CliResult<Vec<CheckRow>> {
    Ok(match suite {
        Suite::Duality => duality(cfg)?,
        Suite::Decomposition => decomposition(cfg)?,
        Suite::Contraction => contraction(cfg)?,
        Suite::All => {
            let mut rows = duality(cfg)?;
            rows.extend(decomposition(cfg)?);
            rows.extend(contraction(cfg)?);
            rows
        }
    })
}

/// Runs the suite, writes `report.csv`, and fails with the first failing
/// check named.
pub fn cmd_verify(cfg: &ProblemConfig, suite: Suite, out: &Path) -> CliResult<Vec<CheckRow>> {
    ensure_dir(out)?;
    let rows = run_suite(cfg, suite)?;
    write_csv(&out.join("report.csv"), &REPORT_HEADER, rows.iter().map(CheckRow::record))?;
    match rows.iter().find(|r| !r.passes()) {
        Some(r) => Err(CliError::Assertion(format!("{} (lhs {}, rhs {}, slack {})", r.name, r.lhs, r.rhs, r.slack))),
        None => Ok(rows),
    }
}

fn duality(cfg: &ProblemConfig) -> CliResult<Vec<CheckRow>> {
    let model = cfg.model()?;
    let (mu0, mu1) = cfg.marginals()?;
    let sol = solve_schrodinger_system(&model, &mu0, &mu1, cfg.solver_options())?;
    let primal = sol.cost_scaled();
    let scale = primal.abs().max(1.0);
    let value = |psi: &GridFunction| dual_functional(&model, &mu0, &mu1, psi);

    let star = optimal_potential(&sol)?;
    let at_star = value(&star)?;
    let closed = dual_potential(&BridgeParams::new(&model, cfg.x0, cfg.x1), 1.0)?.on_grid(sol.grid())?;
    let zero = GridFunction::constant(*sol.grid(), 0.0)?;
    let mut best_random = f64::NEG_INFINITY;
    for psi in random_candidates(&star, WEAK_DUALITY_SAMPLES, WEAK_DUALITY_SEED)? {
        best_random = best_random.max(value(&psi)?);
    }
    let bumped = GridFunction::new(
        *sol.grid(),
        star.values().iter().zip(sol.grid().points()).map(|(s, x)| s + 0.1 * x.sin()).collect(),
    )?;

    Ok(vec![
        CheckRow::equal("strong_duality", at_star, primal, 1e-6 * primal.abs()),
        CheckRow::equal("closed_form_potential", value(&closed)?, primal, 1e-4 * primal.abs()),
        CheckRow::at_most("weak_duality_zero", value(&zero)?, primal, 1e-6 * scale),
        CheckRow::at_most("weak_duality_random", best_random, primal, 1e-6 * scale),
        CheckRow::at_most("perturbed_gap_grows", primal - at_star, primal - value(&bumped)?, 0.0),
    ])
}

fn decomposition(cfg: &ProblemConfig) -> CliResult<Vec<CheckRow>> {
    let model = cfg.model()?;
    let eps = model.epsilon();
    let grid = cfg.grid()?;
    let (mu0, mu1) = cfg.marginals()?;
    let sol = solve_schrodinger_system(&model, &mu0, &mu1, cfg.solver_options())?;
    let cost = sol.cost_unscaled();
    let reference = model.reference(&grid)?;
    let (h0, h1) = (relative_entropy(&mu0, &reference)?, relative_entropy(&mu1, &reference)?);
    let w2sq = wasserstein2_gaussian(&GaussianMeasure::new(cfg.x0, 1.0)?, &GaussianMeasure::new(cfg.x1, 1.0)?);

    let source = PathSource::ClosedForm { model, x0: cfg.x0, x1: cfg.x1 };
    let path = build_path(source, &uniform_times(cfg.time_samples), &grid)?;
    let fine = build_path(source, &uniform_times(2 * cfg.time_samples - 1), &grid.refined())?;
    let d = symmetric_decomposition(&path, h0, h1);
    let bound = cost_lower_bound(eps, cost, h0, h1, w2sq);
    // slack = ε·osmotic + (ε·current − W2²/2); the second term is the
    // excess of the current energy over the displacement energy
    let split = eps * d.osmotic_action + (eps * d.current_action - 0.5 * w2sq);

    let mut rows = vec![
        CheckRow::equal("forward_action_identity", forward_action(&path) + h0, cost, 2e-3),
        CheckRow::equal("decomposition_identity", d.total, cost, 2e-3),
        CheckRow::equal("velocity_cross_term", velocity_cross_term(&path), 0.5 * (h1 - h0), 2e-3),
        CheckRow::at_most("lower_bound", bound.rhs, bound.lhs, 1e-6 * bound.lhs.abs().max(1.0)),
        CheckRow::equal("lower_bound_slack_split", bound.slack, split, 2e-3),
    ];
    for (form, name) in [
        (ContinuityForm::Current, "current"),
        (ContinuityForm::FokkerPlanck, "fokker_planck"),
        (ContinuityForm::Weighted, "weighted"),
    ] {
        let (coarse, refined) = (continuity_residual(&path, form), continuity_residual(&fine, form));
        rows.push(CheckRow::at_most(format!("continuity_{name}"), coarse, 1e-3, 0.0));
        rows.push(CheckRow::at_most(format!("continuity_{name}_refinement"), 3.5, coarse / refined, 0.0));
    }
    Ok(rows)
}

/// `{0.1, 0.2, min(0.4, b_max/2)}` at the given time.
pub fn horizon_samples(lambda: f64, epsilon: f64, t: f64) -> CliResult<[f64; 3]> {
    let b_max = contraction_schedule(lambda, epsilon, t, 1e-12)?.b_max;
    Ok([0.1, 0.2, (0.5 * b_max).min(0.4)])
}

fn contraction(cfg: &ProblemConfig) -> CliResult<Vec<CheckRow>> {
    let model = cfg.model()?;
    let heat = model.potential() == Potential::Zero;
    let (f, g) = cfg.marginals()?;
    let opts = cfg.solver_options();
    let wide = Grid::new(-20.0, 20.0, 801)?;
    let family = test_functions(&wide)?;
    let mut rows = Vec::new();

    // one row per sample point: the family member with the least relative slack
    let worst = |checks: Vec<InequalityCheck>| {
        checks
            .into_iter()
            .min_by(|a, b| (a.slack() / a.tolerance).total_cmp(&(b.slack() / b.tolerance)))
            .expect("family is not empty")
    };
    for t in CONTRACTION_TIMES {
        for b in horizon_samples(model.lambda(), model.epsilon(), t)? {
            let checks = family.iter().map(|h| check_commutation(&model, h, t, b)).collect::<Result<_, _>>()?;
            rows.push(CheckRow::from_check(format!("commutation t={t} b={b:.4}"), &worst(checks)));
        }
    }
    if heat {
        for t in CONTRACTION_TIMES {
            for s in CONTRACTION_TIMES {
                let checks =
                    family.iter().map(|h| check_commutation_dimensional(&model, h, t, s)).collect::<Result<_, _>>()?;
                rows.push(CheckRow::from_check(format!("commutation_dimensional t={t} s={s}"), &worst(checks)));
            }
        }
    }
    for t in CONTRACTION_TIMES {
        for b in horizon_samples(model.lambda(), model.epsilon(), t)? {
            let c = check_entropic_contraction(&model, &f, &g, t, b, opts)?;
            rows.push(CheckRow::from_check(format!("entropic_contraction t={t} b={b:.4}"), &c));
        }
    }
    if heat {
        for t in CONTRACTION_TIMES {
            for s in CONTRACTION_TIMES {
                let c = check_entropic_contraction_dimensional(&model, &f, &g, t, s, opts)?;
                rows.push(CheckRow::from_check(format!("entropic_contraction_dimensional t={t} s={s}"), &c));
            }
        }
    }
    let (g0, g1) = (GaussianMeasure::new(cfg.x0, 1.0)?, GaussianMeasure::new(cfg.x1, 1.0)?);
    for t in CONTRACTION_TIMES {
        let c = check_wasserstein_contraction(&model, &g0, &g1, t)?;
        rows.push(CheckRow::from_check(format!("wasserstein_contraction t={t}"), &c));
    }
    if heat {
        let std = GaussianMeasure::standard();
        for (t, s) in [(1.0, 0.25), (0.5, 1.0), (0.25, 0.25)] {
            let c = check_wasserstein_dimensional(&model, &std, &std, t, s)?;
            rows.push(CheckRow::from_check(format!("wasserstein_dimensional t={t} s={s}"), &c));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_decide_pass_from_slack() {
        assert!(CheckRow::at_most("a", 1.0, 2.0, 0.0).passes());
        assert!(!CheckRow::at_most("a", 2.0, 1.0, 0.5).passes());
        assert!(CheckRow::equal("b", 1.0, 1.0 + 1e-7, 1e-6).passes());
        assert!(!CheckRow::equal("b", 1.0, 1.1, 1e-6).passes());
        assert_eq!(CheckRow::equal("b", 3.0, 1.0, 0.0).slack, -2.0);
    }

    #[test]
    fn horizons_respect_the_domain() {
        let [_, _, b] = horizon_samples(1.0, 1.0, 1.0).unwrap();
        assert!((b - 0.5 * -(1.0 - (-1f64).exp()).ln()).abs() < 1e-9);
        assert_eq!(horizon_samples(0.0, 1.0, 1.0).unwrap(), [0.1, 0.2, 0.4]);
        assert_eq!(horizon_samples(1.0, 1.0, 0.25).unwrap()[2], 0.4);
    }

    #[test]
    fn suite_names() {
        assert_eq!("all".parse::<Suite>(), Ok(Suite::All));
        assert!("everything".parse::<Suite>().is_err());
    }
}
