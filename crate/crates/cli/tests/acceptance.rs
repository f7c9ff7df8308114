//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so every criterion reports even when an earlier one fails. The
//! exit status is nonzero when the outcome departs from `KNOWN_FAILURES`.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::process::ExitCode;

use bridgekit::bridge::cmd_bridge;
use bridgekit::limits::{sweep, trend_violation, DEFAULT_EPSILONS};
use bridgekit::verify::{run_suite, CheckRow, Suite, CONTRACTION_TIMES};
use bridgekit::{KernelChoice, ProblemConfig};
use bridgekit_core::contraction::{check_wasserstein_contraction, check_wasserstein_dimensional};
use bridgekit_core::dynamics::{build_path, cost_lower_bound, symmetric_decomposition, uniform_times, PathSource};
use bridgekit_core::gaussian_bridge::printed::PrintedOuParams;
use bridgekit_core::gaussian_bridge::{bridge_density, bridge_moments};
use bridgekit_core::measures::{relative_entropy, wasserstein2_gaussian};
use bridgekit_core::sinkhorn::{entropic_interpolation, solve_schrodinger_system};
use bridgekit_core::{GaussianMeasure, KolmogorovModel, SchroedingerSolution};

type Outcome = Result<(bool, String), Box<dyn std::error::Error>>;
type Criterion = Box<dyn FnOnce(&mut Reports) -> Outcome>;

const KERNELS: [(KernelChoice, &str); 2] = [(KernelChoice::Heat, "heat"), (KernelChoice::Ou, "ou")];
const QUARTERS: [f64; 3] = [0.25, 0.5, 0.75];

/// Criteria that fail for documented reasons: the osmotic slack omits the
/// excess current energy (5), and the OU bridge variance is constant, so it
/// has no unique maximum (12).
const KNOWN_FAILURES: [usize; 2] = [5, 12];

fn config(kernel: KernelChoice) -> ProblemConfig {
    ProblemConfig { kernel, ..ProblemConfig::default() }
}

fn solve(cfg: &ProblemConfig) -> Result<SchroedingerSolution, Box<dyn std::error::Error>> {
    let (mu0, mu1) = cfg.marginals()?;
    Ok(solve_schrodinger_system(&cfg.model()?, &mu0, &mu1, cfg.solver_options())?)
}

/// Rows of one `verify` suite per kernel, computed once and shared.
struct Reports(HashMap<(&'static str, &'static str), Vec<CheckRow>>);

impl Reports {
    fn rows(
        &mut self,
        kernel: KernelChoice,
        name: &'static str,
        suite: Suite,
        suite_name: &'static str,
    ) -> Result<&[CheckRow], Box<dyn std::error::Error>> {
        let key = (name, suite_name);
        if let Entry::Vacant(slot) = self.0.entry(key) {
            slot.insert(run_suite(&config(kernel), suite)?);
        }
        Ok(&self.0[&key])
    }
}

/// All rows whose name starts with `prefix` must pass; reports the worst.
fn rows_pass(label: &str, rows: &[CheckRow], prefix: &str) -> (bool, String) {
    let picked: Vec<&CheckRow> = rows.iter().filter(|r| r.name.starts_with(prefix)).collect();
    if picked.is_empty() {
        return (false, format!("{label}: no `{prefix}` rows"));
    }
    let worst = picked.iter().min_by(|a, b| (a.slack + a.tolerance).total_cmp(&(b.slack + b.tolerance))).unwrap();
    let ok = picked.iter().all(|r| r.passes());
    (
        ok,
        format!(
            "{label} {prefix}: {}/{} pass, worst `{}` slack {:.3e} tol {:.1e}",
            picked.iter().filter(|r| r.passes()).count(),
            picked.len(),
            worst.name,
            worst.slack,
            worst.tolerance
        ),
    )
}

fn combine(parts: Vec<(bool, String)>) -> (bool, String) {
    let ok = parts.iter().all(|p| p.0);
    (ok, parts.into_iter().map(|p| p.1).collect::<Vec<_>>().join("; "))
}

fn closed_form_bridges() -> Outcome {
    let heat = KolmogorovModel::heat(1.0)?;
    let ou = KolmogorovModel::ornstein_uhlenbeck(1.0)?;
    let d = |m: &KolmogorovModel, t| bridge_moments(m, -3.0, 3.0, t).map(|b| b.variance);
    let (h0, h_half, h1) = (d(&heat, 0.0)?, d(&heat, 0.5)?, d(&heat, 1.0)?);
    let expected = 1.0 + (5f64.sqrt() - 2.0) / 4.0;
    let printed = PrintedOuParams::new(1.0, -3.0, 3.0);
    let ou_ends = [d(&ou, 0.0)?, d(&ou, 1.0)?, printed.moments(0.0)?.variance, printed.moments(1.0)?.variance];
    let ou_err = ou_ends.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    let ok = h0 == 1.0 && h1 == 1.0 && (h_half - expected).abs() <= 1e-10 && ou_err <= 1e-8;
    Ok((
        ok,
        format!(
            "heat D0={h0} D1={h1} |D½−{expected:.12}|={:.1e}; OU endpoint variance error {ou_err:.1e}",
            (h_half - expected).abs()
        ),
    ))
}

fn oracle_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (kernel, name) in KERNELS {
        for epsilon in [1.0, 0.1] {
            let cfg = ProblemConfig { kernel, epsilon, ..ProblemConfig::default() };
            let sol = solve(&cfg)?;
            let model = cfg.model()?;
            let mut err: f64 = 0.0;
            for t in QUARTERS {
                let exact = bridge_density(&bridge_moments(&model, cfg.x0, cfg.x1, t)?, sol.grid())?;
                err = err.max(entropic_interpolation(&sol, t, sol.grid())?.sup_distance(&exact)?);
            }
            worst = worst.max(err);
            parts.push(format!("{name} ε={epsilon}: {err:.1e}"));
        }
    }
    Ok((worst < 1e-3, format!("sup-norm {}", parts.join(", "))))
}

fn duality(reports: &mut Reports) -> Outcome {
    let mut parts = Vec::new();
    for (kernel, name) in KERNELS {
        let rows = reports.rows(kernel, name, Suite::Duality, "duality")?;
        parts.push(rows_pass(name, rows, "strong_duality"));
        parts.push(rows_pass(name, rows, "weak_duality"));
    }
    Ok(combine(parts))
}

fn decomposition(reports: &mut Reports) -> Outcome {
    let mut parts = Vec::new();
    for (kernel, name) in KERNELS {
        parts.push(rows_pass(
            name,
            reports.rows(kernel, name, Suite::Decomposition, "decomposition")?,
            "decomposition_identity",
        ));
    }
    Ok(combine(parts))
}

/// Taken literally: the slack must equal `ε·osmotic` alone.
fn lower_bound() -> Outcome {
    let mut parts = Vec::new();
    for (kernel, name) in KERNELS {
        let cfg = config(kernel);
        let model = cfg.model()?;
        let grid = cfg.grid()?;
        let (mu0, mu1) = cfg.marginals()?;
        let sol = solve_schrodinger_system(&model, &mu0, &mu1, cfg.solver_options())?;
        let reference = model.reference(&grid)?;
        let (h0, h1) = (relative_entropy(&mu0, &reference)?, relative_entropy(&mu1, &reference)?);
        let w2sq = wasserstein2_gaussian(&GaussianMeasure::new(cfg.x0, 1.0)?, &GaussianMeasure::new(cfg.x1, 1.0)?);
        let path = build_path(
            PathSource::ClosedForm { model, x0: cfg.x0, x1: cfg.x1 },
            &uniform_times(cfg.time_samples),
            &grid,
        )?;
        let osmotic = model.epsilon() * symmetric_decomposition(&path, h0, h1).osmotic_action;
        let bound = cost_lower_bound(model.epsilon(), sol.cost_unscaled(), h0, h1, w2sq);
        let gap = (bound.slack - osmotic).abs();
        parts.push((
            bound.slack >= 0.0 && gap <= 2e-3,
            format!("{name}: slack {:.6} ε·osmotic {osmotic:.6} |diff| {gap:.2e}", bound.slack),
        ));
    }
    Ok(combine(parts))
}

fn small_noise_limit() -> Outcome {
    let mut parts = Vec::new();
    for (kernel, name) in KERNELS {
        let rows = sweep(&config(kernel), &DEFAULT_EPSILONS)?;
        let errors: Vec<String> =
            rows.iter().map(|r| r.abs_error().map_or("n/c".into(), |e| format!("{e:.4}"))).collect();
        let ok = rows.iter().all(|r| r.scaled_cost.is_some()) && trend_violation(&rows).is_none();
        parts.push((ok, format!("{name} |ε·A − {}| = [{}]", rows[0].target, errors.join(", "))));
    }
    Ok(combine(parts))
}

fn continuity(reports: &mut Reports) -> Outcome {
    let mut parts = Vec::new();
    for (kernel, name) in KERNELS {
        let rows = reports.rows(kernel, name, Suite::Decomposition, "decomposition")?;
        parts.push(rows_pass(name, rows, "continuity_"));
    }
    Ok(combine(parts))
}

fn commutation(reports: &mut Reports) -> Outcome {
    let ou =
        rows_pass("ou", reports.rows(KernelChoice::Ou, "ou", Suite::Contraction, "contraction")?, "commutation t=");
    let heat = rows_pass(
        "heat",
        reports.rows(KernelChoice::Heat, "heat", Suite::Contraction, "contraction")?,
        "commutation_dimensional",
    );
    Ok(combine(vec![ou, heat]))
}

fn entropic_contraction(reports: &mut Reports) -> Outcome {
    let ou = rows_pass(
        "ou",
        reports.rows(KernelChoice::Ou, "ou", Suite::Contraction, "contraction")?,
        "entropic_contraction t=",
    );
    let heat = rows_pass(
        "heat",
        reports.rows(KernelChoice::Heat, "heat", Suite::Contraction, "contraction")?,
        "entropic_contraction_dimensional",
    );
    Ok(combine(vec![ou, heat]))
}

fn wasserstein_closed_forms() -> Outcome {
    let ou = KolmogorovModel::ornstein_uhlenbeck(1.0)?;
    let (g0, g1) = (GaussianMeasure::new(-3.0, 1.0)?, GaussianMeasure::new(3.0, 1.0)?);
    let mut equality_err: f64 = 0.0;
    for t in CONTRACTION_TIMES {
        let c = check_wasserstein_contraction(&ou, &g0, &g1, t)?;
        equality_err = equality_err.max((c.lhs - c.rhs).abs());
    }
    let heat = KolmogorovModel::heat(1.0)?;
    let std = GaussianMeasure::standard();
    let mut min_slack = f64::INFINITY;
    for t in CONTRACTION_TIMES {
        for s in CONTRACTION_TIMES.into_iter().filter(|&s| s != t) {
            min_slack = min_slack.min(check_wasserstein_dimensional(&heat, &std, &std, t, s)?.slack());
        }
    }
    let ok = equality_err <= 1e-10 && min_slack > 0.0;
    Ok((ok, format!("OU equality error {equality_err:.1e}; heat dimensional minimum slack {min_slack:.3e}")))
}

fn symmetry() -> Outcome {
    let mut parts = Vec::new();
    for (kernel, name) in KERNELS {
        let cfg = config(kernel);
        let swapped = ProblemConfig { x0: cfg.x1, x1: cfg.x0, ..cfg.clone() };
        let (a, b) = (solve(&cfg)?, solve(&swapped)?);
        let cost_gap = (a.cost_unscaled() - b.cost_unscaled()).abs();
        let mut path_gap: f64 = 0.0;
        for t in QUARTERS {
            let fwd = entropic_interpolation(&a, t, a.grid())?;
            let rev = entropic_interpolation(&b, 1.0 - t, b.grid())?;
            path_gap = path_gap.max(fwd.sup_distance(&rev)?);
        }
        parts.push((
            cost_gap <= 1e-8 && path_gap <= 1e-6,
            format!("{name}: |A(μ0,μ1) − A(μ1,μ0)| {cost_gap:.1e}, reversed paths {path_gap:.1e}"),
        ));
    }
    Ok(combine(parts))
}

fn read_moments(dir: &std::path::Path) -> Result<HashMap<String, Vec<f64>>, Box<dyn std::error::Error>> {
    let mut reader = csv::Reader::from_path(dir.join("moments.csv"))?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let mut columns: HashMap<String, Vec<f64>> = header.iter().map(|h| (h.clone(), Vec::new())).collect();
    for record in reader.records() {
        for (h, v) in header.iter().zip(record?.iter()) {
            columns.get_mut(h).unwrap().push(v.parse()?);
        }
    }
    Ok(columns)
}

/// The sample at `t = ½` must be strictly larger than every other sample.
fn unique_argmax_at_half(t: &[f64], values: &[f64]) -> bool {
    let Some(mid) = t.iter().position(|&s| s == 0.5) else { return false };
    values.iter().enumerate().all(|(i, &v)| i == mid || v < values[mid])
}

fn figure_invariants() -> Outcome {
    let dir = tempfile::tempdir()?;
    let symmetric = ProblemConfig::default();
    let asymmetric = ProblemConfig { x0: 1.0, x1: 7.0, ..ProblemConfig::default() };
    let mut parts = Vec::new();
    let mut tables = Vec::new();
    for (cfg, tag) in [(&symmetric, "sym"), (&asymmetric, "asym")] {
        let out = dir.path().join(tag);
        cmd_bridge(cfg, &out)?;
        tables.push(read_moments(&out)?);
    }
    let mean_gap = tables
        .iter()
        .flat_map(|m| m["mean_mccann"].iter().zip(&m["mean_heat"]).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    parts.push((mean_gap <= 1e-10, format!("|mean_mccann − mean_heat| {mean_gap:.1e}")));
    let sym = &tables[0];
    for column in ["var_heat", "var_ou"] {
        let ok = unique_argmax_at_half(&sym["t"], &sym[column]);
        let (lo, hi) = sym[column].iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        parts.push((
            ok,
            format!("{column} argmax at ½: {} (range {lo:.6}..{hi:.6})", if ok { "unique" } else { "not unique" }),
        ));
    }
    let asym = &tables[1];
    let mid = asym["t"].iter().position(|&s| s == 0.5).ok_or("t = ½ is not sampled")?;
    let diff = asym["mean_ou"][mid] - asym["mean_mccann"][mid];
    parts.push((
        diff.abs() > 1e-10,
        format!("x0=1 x1=7: mean_ou − mean_mccann at ½ = {diff:.6} (sign {})", if diff > 0.0 { "+" } else { "−" }),
    ));
    Ok(combine(parts))
}

fn main() -> ExitCode {
    let mut reports = Reports(HashMap::new());
    let criteria: Vec<(&str, Criterion)> = vec![
        ("closed-form bridge moments", Box::new(|_| closed_form_bridges())),
        ("sinkhorn interpolation matches closed form", Box::new(|_| oracle_equivalence())),
        ("strong and weak duality", Box::new(duality)),
        ("action decomposition identity", Box::new(decomposition)),
        ("cost lower bound and osmotic slack", Box::new(|_| lower_bound())),
        ("small-noise limit error decreases", Box::new(|_| small_noise_limit())),
        ("continuity residuals and refinement", Box::new(continuity)),
        ("commutation inequality", Box::new(commutation)),
        ("entropic contraction", Box::new(entropic_contraction)),
        ("wasserstein contraction closed forms", Box::new(|_| wasserstein_closed_forms())),
        ("swap and time-reversal symmetry", Box::new(|_| symmetry())),
        ("bridge figure invariants", Box::new(|_| figure_invariants())),
    ];
    let total = criteria.len();
    let (mut failed, mut surprises) = (Vec::new(), 0);
    for (i, (title, run)) in criteria.into_iter().enumerate() {
        let id = i + 1;
        let (ok, detail) = run(&mut reports).unwrap_or_else(|e| (false, format!("error: {e}")));
        let known = KNOWN_FAILURES.contains(&id);
        let note = match (ok, known) {
            (false, true) => " [known failure, see README]",
            (true, true) => " [listed as a known failure but passed]",
            _ => "",
        };
        if !ok {
            failed.push(id);
        }
        surprises += usize::from(ok == known);
        println!("{} {id:>2} {title}: {detail}{note}", if ok { "PASS" } else { "FAIL" });
    }
    println!(
        "acceptance: {} of {total} criteria pass; failing: {failed:?}; known failures: {KNOWN_FAILURES:?}",
        total - failed.len()
    );
    // only a change against the known list fails the target
    if surprises == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
