//! Contraction schedules and the commutation / contraction inequalities.
//!
//! Clock conventions. `Q^ε_u ψ = ε log T^ε_u e^{ψ/ε}` and the horizon-`u`
//! cost `A^ε_u` use the dilated kernel at time `u`. The plain semigroup
//! `T_t` and the schedules `u_t(b)`, `v_t(b)` live on the undilated clock,
//! so `T_t` is the dilated kernel at time `t/ε`. At `ε = 1` the two clocks
//! coincide. The Gaussian Wasserstein checks keep the dilated clock, where
//! the contraction rate is `e^{-λεt/2}`.

use crate::error::{Error, Result};
use crate::measures::{relative_entropy, wasserstein2_gaussian, GaussianMeasure, Grid, GridDensity, GridFunction};
use crate::semigroup::{build_kernel, hopf_lax_with_kernel, KernelMatrix, KolmogorovModel, Potential, ROW_SPAN_SIGMAS};
use crate::sinkhorn::{solve_schrodinger_system, SolverOptions};

/// Pointwise commutation checks pass at `10⁻⁶·(1 + ‖f‖∞)`.
pub const COMMUTATION_TOL: f64 = 1e-6;
/// Entropic contraction checks pass at `10⁻⁴·max(1, |rhs|)`.
pub const ENTROPIC_TOL: f64 = 1e-4;
/// Closed-form Wasserstein checks pass at `10⁻¹⁰·max(1, |rhs|)`.
pub const WASSERSTEIN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionSchedule {
    pub lambda: f64,
    pub epsilon: f64,
    pub t: f64,
    pub b: f64,
    pub u: f64,
    pub v: f64,
    /// `+∞` when `λ = 0` or `t = 0`.
    pub b_max: f64,
}

pub fn contraction_schedule(lambda: f64, epsilon: f64, t: f64, b: f64) -> Result<ContractionSchedule> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidInput(format!("ε must be positive, got {epsilon}")));
    }
    if !(t.is_finite() && t >= 0.0) || !(b.is_finite() && b > 0.0) {
        return Err(Error::InvalidInput(format!("need t ≥ 0 and b > 0, got t = {t}, b = {b}")));
    }
    if lambda < 0.0 {
        return Err(Error::Unsupported("negative curvature schedules".into()));
    }
    if lambda == 0.0 {
        return Ok(ContractionSchedule { lambda, epsilon, t, b, u: t, v: b, b_max: f64::INFINITY });
    }
    let b_max = -(-(-lambda * t).exp()).ln_1p() / (lambda * epsilon);
    if !(b < b_max) {
        return Err(Error::ScheduleDomain { b, b_max });
    }
    // log(1 + e^{λt}(e^{-ελb} - 1))
    let log_arg = ((lambda * t).exp() * (-epsilon * lambda * b).exp_m1()).ln_1p();
    let v = -log_arg / (lambda * epsilon);
    let u = t - epsilon * b - log_arg / lambda;
    Ok(ContractionSchedule { lambda, epsilon, t, b, u: u.max(0.0), v, b_max })
}

/// An inequality `lhs ≤ rhs` evaluated numerically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
}

impl InequalityCheck {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn passes(&self) -> bool {
        self.slack() >= -self.tolerance
    }
}

fn undilated_kernel(model: &KolmogorovModel, t: f64, grid: &Grid) -> Result<KernelMatrix> {
    build_kernel(model, t / model.epsilon(), grid)
}

fn kernel_sd(model: &KolmogorovModel, dilated_t: f64) -> f64 {
    model.transition_moments(0.0, dilated_t).1.sqrt()
}

/// Worst point of `lhs ≤ rhs + constant` over points further than
/// `margin` from the grid ends.
fn pointwise_worst(
    lhs: &GridFunction,
    rhs: &GridFunction,
    constant: f64,
    margin: f64,
    tolerance: f64,
) -> Result<InequalityCheck> {
    let grid = lhs.grid();
    let interior: Vec<usize> = (0..grid.len())
        .filter(|&i| {
            let x = grid.point(i);
            x - grid.lo() >= margin && grid.hi() - x >= margin
        })
        .collect();
    let worst = interior
        .into_iter()
        .max_by(|&a, &b| {
            let da = lhs.values()[a] - rhs.values()[a];
            let db = lhs.values()[b] - rhs.values()[b];
            da.total_cmp(&db)
        })
        .ok_or_else(|| Error::InvalidInput(format!("grid has no points {margin:.3} inside its ends")))?;
    Ok(InequalityCheck { lhs: lhs.values()[worst], rhs: rhs.values()[worst] + constant, tolerance })
}

fn commutation_tolerance(f: &GridFunction) -> f64 {
    COMMUTATION_TOL * (1.0 + f.sup_norm())
}

/// `Q^ε_{v_t(b)}(T_t f) ≤ T_{u_t(b)}(Q^ε_b f)` at the worst interior point.
pub fn check_commutation(model: &KolmogorovModel, f: &GridFunction, t: f64, b: f64) -> Result<InequalityCheck> {
    let s = contraction_schedule(model.lambda(), model.epsilon(), t, b)?;
    commutation_with(model, f, s.t, s.u, s.v, b, 0.0)
}

/// Heat only: `Q^ε_1(T_t f) ≤ T_s(Q^ε_1 f) + ½(√t - √s)²`.
pub fn check_commutation_dimensional(
    model: &KolmogorovModel,
    f: &GridFunction,
    t: f64,
    s: f64,
) -> Result<InequalityCheck> {
    if model.potential() != Potential::Zero {
        return Err(Error::ModelMismatch("the dimensional commutation bound is for the heat kernel".into()));
    }
    if !(t >= 0.0 && s >= 0.0) {
        return Err(Error::InvalidInput(format!("need t, s ≥ 0, got t = {t}, s = {s}")));
    }
    let constant = 0.5 * (t.sqrt() - s.sqrt()).powi(2);
    commutation_with(model, f, t, s, 1.0, 1.0, constant)
}

/// For `b ≥ b_max` the schedule formulas are undefined; this evaluates the
/// inequality with the small-noise schedules `u = t`, `v = b e^{λt}`.
/// Only meaningful for small `ε`; outcomes are reported, not asserted.
pub fn check_commutation_beyond_domain(
    model: &KolmogorovModel,
    f: &GridFunction,
    t: f64,
    b: f64,
) -> Result<InequalityCheck> {
    if model.epsilon() > 0.01 {
        return Err(Error::InvalidInput(format!("beyond-domain checks need ε ≤ 0.01, got {}", model.epsilon())));
    }
    commutation_with(model, f, t, t, b * (model.lambda() * t).exp(), b, 0.0)
}

/// `Q^ε_v(T_t f) ≤ T_u(Q^ε_b f) + constant`, with `t`, `u` undilated and
/// `v`, `b` dilated horizons.
fn commutation_with(
    model: &KolmogorovModel,
    f: &GridFunction,
    t: f64,
    u: f64,
    v: f64,
    b: f64,
    constant: f64,
) -> Result<InequalityCheck> {
    let grid = f.grid();
    let eps = model.epsilon();
    let tt = undilated_kernel(model, t, grid)?;
    let tu = undilated_kernel(model, u, grid)?;
    let lhs = hopf_lax_with_kernel(&build_kernel(model, v, grid)?, &tt.apply(f)?)?;
    let rhs = tu.apply(&hopf_lax_with_kernel(&build_kernel(model, b, grid)?, f)?)?;
    let margin = ROW_SPAN_SIGMAS
        * (kernel_sd(model, t / eps) + kernel_sd(model, v)).max(kernel_sd(model, u / eps) + kernel_sd(model, b));
    pointwise_worst(&lhs, &rhs, constant, margin, commutation_tolerance(f))
}

/// Bounded test functions: capped quadratics `c ∧ (a(x - x̄)² + d)` and
/// trigonometric bumps.
pub fn test_functions(grid: &Grid) -> Result<Vec<GridFunction>> {
    let capped = |a: f64, center: f64, d: f64, cap: f64| {
        GridFunction::from_fn(*grid, move |x| (a * (x - center).powi(2) + d).min(cap))
    };
    Ok(vec![
        GridFunction::constant(*grid, 1.5)?,
        capped(0.5, 0.0, 0.0, 4.0)?,
        capped(2.0, 1.0, -1.0, 3.0)?,
        capped(1.0, -1.5, 0.5, 8.0)?,
        GridFunction::from_fn(*grid, |x| (0.7 * x).sin())?,
        GridFunction::from_fn(*grid, |x| 2.0 * (2.0 * x + 0.3).cos())?,
        GridFunction::from_fn(*grid, |x| (0.5 * x * x).min(3.0) + 0.3 * (3.0 * x).sin())?,
    ])
}

/// `(T_t ρ)·m`, the law at undilated time `t` started from `μ = ρ m`.
fn evolve_density(model: &KolmogorovModel, mu: &GridDensity, t: f64) -> Result<GridDensity> {
    let grid = *mu.grid();
    let reference = model.reference(&grid)?;
    let rho = GridFunction::new(grid, reference.log_ratio(mu)?.into_iter().map(f64::exp).collect())?;
    let evolved = undilated_kernel(model, t, &grid)?.apply(&rho)?;
    let values = evolved.values().iter().zip(reference.weights()).map(|(r, w)| r * w).collect();
    GridDensity::normalized(grid, values)
}

/// `A^ε_h(μ, ν)` in scaled units: the kernel at dilated time `h` is the
/// time-1 kernel of the model with dilation `εh`.
fn scaled_cost(
    model: &KolmogorovModel,
    mu: &GridDensity,
    nu: &GridDensity,
    h: f64,
    opts: SolverOptions,
) -> Result<f64> {
    let horizon = model.with_epsilon(model.epsilon() * h)?;
    Ok(model.epsilon() * solve_schrodinger_system(&horizon, mu, nu, opts)?.cost_unscaled())
}

fn entropic_tolerance(rhs: f64) -> f64 {
    ENTROPIC_TOL * rhs.abs().max(1.0)
}

/// `A^ε_b(T_u fm, T_t gm) ≤ A^ε_v(fm, gm) + ε[H(T_u fm|m) - H(fm|m)]`.
pub fn check_entropic_contraction(
    model: &KolmogorovModel,
    f: &GridDensity,
    g: &GridDensity,
    t: f64,
    b: f64,
    opts: SolverOptions,
) -> Result<InequalityCheck> {
    let s = contraction_schedule(model.lambda(), model.epsilon(), t, b)?;
    let reference = model.reference(f.grid())?;
    let fu = evolve_density(model, f, s.u)?;
    let gt = evolve_density(model, g, s.t)?;
    let lhs = scaled_cost(model, &fu, &gt, s.b, opts)?;
    let entropy_change = relative_entropy(&fu, &reference)? - relative_entropy(f, &reference)?;
    let rhs = scaled_cost(model, f, g, s.v, opts)? + model.epsilon() * entropy_change;
    Ok(InequalityCheck { lhs, rhs, tolerance: entropic_tolerance(rhs) })
}

/// Heat only: `A^ε(T_t fm, T_s gm) ≤ A^ε(fm, gm) + ½(√t - √s)² + ε[H(T_t fm|m) - H(fm|m)]`.
pub fn check_entropic_contraction_dimensional(
    model: &KolmogorovModel,
    f: &GridDensity,
    g: &GridDensity,
    t: f64,
    s: f64,
    opts: SolverOptions,
) -> Result<InequalityCheck> {
    if model.potential() != Potential::Zero {
        return Err(Error::ModelMismatch("the dimensional contraction bound is for the heat kernel".into()));
    }
    let reference = model.reference(f.grid())?;
    let ft = evolve_density(model, f, t)?;
    let gs = evolve_density(model, g, s)?;
    let lhs = scaled_cost(model, &ft, &gs, 1.0, opts)?;
    let entropy_change = relative_entropy(&ft, &reference)? - relative_entropy(f, &reference)?;
    let rhs =
        scaled_cost(model, f, g, 1.0, opts)? + 0.5 * (t.sqrt() - s.sqrt()).powi(2) + model.epsilon() * entropy_change;
    Ok(InequalityCheck { lhs, rhs, tolerance: entropic_tolerance(rhs) })
}

fn evolve(model: &KolmogorovModel, g: &GaussianMeasure, t: f64) -> Result<GaussianMeasure> {
    let (mean, var) = model.evolve_gaussian(g.mean(), g.variance(), t);
    GaussianMeasure::new(mean, var)
}

/// `W2(T_t g0, T_t g1) ≤ e^{-λεt/2} W2(g0, g1)` on the dilated clock.
pub fn check_wasserstein_contraction(
    model: &KolmogorovModel,
    g0: &GaussianMeasure,
    g1: &GaussianMeasure,
    t: f64,
) -> Result<InequalityCheck> {
    let lhs = wasserstein2_gaussian(&evolve(model, g0, t)?, &evolve(model, g1, t)?).sqrt();
    let rhs = (-0.5 * model.lambda() * model.epsilon() * t).exp() * wasserstein2_gaussian(g0, g1).sqrt();
    Ok(InequalityCheck { lhs, rhs, tolerance: WASSERSTEIN_TOL * rhs.abs().max(1.0) })
}

/// Heat only: `W2²(T_t g0, T_s g1) ≤ W2²(g0, g1) + (√(εt) - √(εs))²`.
pub fn check_wasserstein_dimensional(
    model: &KolmogorovModel,
    g0: &GaussianMeasure,
    g1: &GaussianMeasure,
    t: f64,
    s: f64,
) -> Result<InequalityCheck> {
    if model.potential() != Potential::Zero {
        return Err(Error::ModelMismatch("the dimensional contraction bound is for the heat kernel".into()));
    }
    let eps = model.epsilon();
    let lhs = wasserstein2_gaussian(&evolve(model, g0, t)?, &evolve(model, g1, s)?);
    let rhs = wasserstein2_gaussian(g0, g1) + ((eps * t).sqrt() - (eps * s).sqrt()).powi(2);
    Ok(InequalityCheck { lhs, rhs, tolerance: WASSERSTEIN_TOL * rhs.abs().max(1.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::gaussian_grid_density;
    use approx::assert_abs_diff_eq;

    fn ou(eps: f64) -> KolmogorovModel {
        KolmogorovModel::ornstein_uhlenbeck(eps).unwrap()
    }

    fn heat(eps: f64) -> KolmogorovModel {
        KolmogorovModel::heat(eps).unwrap()
    }

    fn wide() -> Grid {
        Grid::new(-20.0, 20.0, 801).unwrap()
    }

    fn gaussian(grid: &Grid, mean: f64, var: f64) -> GridDensity {
        gaussian_grid_density(&GaussianMeasure::new(mean, var).unwrap(), grid).unwrap()
    }

    #[test]
    fn flat_schedule_without_curvature() {
        for (t, b) in [(0.3, 0.1), (2.0, 5.0)] {
            let s = contraction_schedule(0.0, 0.7, t, b).unwrap();
            assert_eq!((s.u, s.v, s.b_max), (t, b, f64::INFINITY));
        }
    }

    #[test]
    fn unit_curvature_schedule() {
        let s = contraction_schedule(1.0, 1.0, 1.0, 0.2).unwrap();
        assert_abs_diff_eq!(s.b_max, -(1.0 - (-1f64).exp()).ln(), epsilon = 1e-14);
        assert_abs_diff_eq!(s.b_max, 0.4587, epsilon = 1e-4);
        let arg = 1.0 + 1f64.exp() * ((-0.2f64).exp() - 1.0);
        assert_abs_diff_eq!(s.v, -arg.ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(s.u, 1.0 + ((-0.2f64).exp() / arg).ln(), epsilon = 1e-13);
        assert!(s.u > 0.0 && s.v > 0.0);
        assert_eq!(contraction_schedule(1.0, 1.0, 1.0, 0.5), Err(Error::ScheduleDomain { b: 0.5, b_max: s.b_max }));
        let z = contraction_schedule(1.0, 1.0, 0.0, 0.3).unwrap();
        assert_abs_diff_eq!(z.u, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z.v, 0.3, epsilon = 1e-15);
    }

    #[test]
    fn small_noise_schedule_limits() {
        let target = 0.2 * 1f64.exp();
        let s = contraction_schedule(1.0, 0.01, 1.0, 0.2).unwrap();
        assert!((s.v - target).abs() / target < 0.01);
        let errs: Vec<(f64, f64)> = [0.1, 0.01, 0.001]
            .iter()
            .map(|&e| {
                let s = contraction_schedule(1.0, e, 1.0, 0.2).unwrap();
                ((s.v - target).abs(), (s.u - 1.0).abs())
            })
            .collect();
        for w in errs.windows(2) {
            // first order: ten times smaller ε, roughly ten times smaller error
            assert!(w[0].0 / w[1].0 > 8.0 && w[0].0 / w[1].0 < 12.0);
            assert!(w[0].1 / w[1].1 > 8.0 && w[0].1 / w[1].1 < 12.0);
        }
    }

    #[test]
    fn v_grows_with_t() {
        let vs: Vec<f64> = (1..=20).map(|k| contraction_schedule(1.0, 1.0, 0.05 * k as f64, 0.1).unwrap().v).collect();
        assert!(vs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn negative_curvature_is_rejected() {
        assert!(matches!(contraction_schedule(-1.0, 1.0, 1.0, 0.1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn constants_commute_exactly() {
        let f = GridFunction::constant(wide(), 2.5).unwrap();
        let c = check_commutation(&ou(1.0), &f, 0.5, 0.2).unwrap();
        assert!(c.slack().abs() < 1e-9);
        let d = check_commutation_dimensional(&heat(1.0), &f, 1.0, 0.25).unwrap();
        assert_abs_diff_eq!(d.lhs - d.rhs, -0.125, epsilon = 1e-9);
    }

    #[test]
    fn commutation_holds_on_the_test_family() {
        let grid = wide();
        for f in test_functions(&grid).unwrap() {
            for (t, b) in [(0.5, 0.2), (0.25, 0.1), (1.0, 0.4)] {
                let c = check_commutation(&ou(1.0), &f, t, b).unwrap();
                assert!(c.passes(), "ou t={t} b={b}: {c:?}");
                let h = check_commutation(&heat(1.0), &f, t, b).unwrap();
                assert!(h.passes(), "heat t={t} b={b}: {h:?}");
            }
            for (t, s) in [(1.0, 0.25), (0.5, 0.5), (0.25, 1.0)] {
                let d = check_commutation_dimensional(&heat(1.0), &f, t, s).unwrap();
                assert!(d.passes(), "t={t} s={s}: {d:?}");
            }
        }
    }

    #[test]
    fn dimensional_checks_refuse_ou() {
        let f = GridFunction::constant(wide(), 0.0).unwrap();
        assert!(matches!(check_commutation_dimensional(&ou(1.0), &f, 1.0, 0.5), Err(Error::ModelMismatch(_))));
    }

    #[test]
    fn entropic_contraction_collapses_at_time_zero() {
        let grid = Grid::for_endpoints(-1.0, 2.0).unwrap();
        let (f, g) = (gaussian(&grid, -1.0, 1.0), gaussian(&grid, 2.0, 1.0));
        let c = check_entropic_contraction(&ou(1.0), &f, &g, 0.0, 0.2, SolverOptions::default()).unwrap();
        assert!(c.slack().abs() < 1e-6, "{c:?}");
    }

    #[test]
    fn entropic_contraction_for_ou() {
        let grid = Grid::for_endpoints(-1.0, 2.0).unwrap();
        let (f, g) = (gaussian(&grid, -1.0, 1.0), gaussian(&grid, 2.0, 1.0));
        let c = check_entropic_contraction(&ou(1.0), &f, &g, 0.5, 0.2, SolverOptions::default()).unwrap();
        assert!(c.passes(), "{c:?}");
    }

    #[test]
    fn dimensional_entropic_contraction_for_heat() {
        let grid = Grid::for_endpoints(-1.0, 2.0).unwrap();
        let (f, g) = (gaussian(&grid, -1.0, 1.0), gaussian(&grid, 2.0, 1.0));
        let c = check_entropic_contraction_dimensional(&heat(1.0), &f, &g, 0.5, 0.2, SolverOptions::default()).unwrap();
        assert!(c.passes(), "{c:?}");
    }

    #[test]
    fn wasserstein_closed_forms() {
        let (a, b) = (GaussianMeasure::new(-3.0, 1.0).unwrap(), GaussianMeasure::new(3.0, 1.0).unwrap());
        let c = check_wasserstein_contraction(&ou(1.0), &a, &b, 1.0).unwrap();
        assert_abs_diff_eq!(c.lhs, 6.0 * (-0.5f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(c.rhs, 6.0 * (-0.5f64).exp(), epsilon = 1e-12);
        assert!(c.passes());
        let z = check_wasserstein_contraction(&heat(1.0), &a, &a, 2.0).unwrap();
        assert_eq!((z.lhs, z.rhs), (0.0, 0.0));
        let s = GaussianMeasure::standard();
        for eps in [0.5, 1.0, 2.0] {
            let d = check_wasserstein_dimensional(&heat(eps), &s, &s, 1.0, 0.25).unwrap();
            assert_abs_diff_eq!(d.lhs, ((1.0 + eps).sqrt() - (1.0 + eps / 4.0).sqrt()).powi(2), epsilon = 1e-14);
            assert!(d.slack() > 0.0);
        }
    }

    #[test]
    fn entropic_slack_approaches_wasserstein_slack() {
        // Unequal variances keep the Wasserstein slack away from its equality case.
        let grid = Grid::new(-10.0, 10.0, 512).unwrap();
        let (f, g) = (gaussian(&grid, -1.0, 0.5), gaussian(&grid, 2.0, 2.0));
        let (t, b) = (0.5, 0.2);
        let w_slack = {
            let one = ou(1.0);
            let (a, c) = (GaussianMeasure::new(-1.0, 0.5).unwrap(), GaussianMeasure::new(2.0, 2.0).unwrap());
            let w = check_wasserstein_contraction(&one, &a, &c, t).unwrap();
            w.rhs * w.rhs - w.lhs * w.lhs
        };
        let gaps: Vec<f64> = [1.0, 0.5, 0.25]
            .iter()
            .map(|&eps| {
                let c = check_entropic_contraction(&ou(eps), &f, &g, t, b, SolverOptions::default()).unwrap();
                (2.0 * b * c.slack() - w_slack).abs()
            })
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    }
}
