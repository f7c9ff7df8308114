//! Log-domain iterative proportional fitting for the Schrödinger system
//!
//! ```text
//! dμ0/dm = f0 · T_1 g1,    dμ1/dm = g1 · T_1 f0
//! ```
//!
//! The solver stores `log f0` and `log g1` and alternates the two marginal
//! projections starting from `g1 ≡ 1`. For small dilations the potentials
//! span hundreds of e-folds, so nothing is exponentiated until the end.

use crate::error::{Error, Result};
use crate::measures::{Grid, GridDensity, GridFunction, ReferenceMeasure};
use crate::semigroup::{build_kernel, KernelMatrix, KolmogorovModel};

/// Mass drift tolerated in an interpolation before it is renormalised.
pub const INTERPOLATION_MASS_DRIFT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop when the sup-norm marginal error drops to this value.
    pub tol: f64,
    pub maxiter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-9, maxiter: 100_000 }
    }
}

#[derive(Debug, Clone)]
pub struct SchroedingerSolution {
    model: KolmogorovModel,
    reference: ReferenceMeasure,
    kernel: KernelMatrix,
    log_f0: Vec<f64>,
    log_g1: Vec<f64>,
    cost_unscaled: f64,
    iterations: usize,
    marginal_error: f64,
    error_history: Vec<f64>,
    converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropicCost {
    /// `H(π | R01)`
    pub unscaled: f64,
    /// `ε H(π | R01)`
    pub scaled: f64,
}

impl SchroedingerSolution {
    pub fn model(&self) -> &KolmogorovModel {
        &self.model
    }

    pub fn grid(&self) -> &Grid {
        self.kernel.grid()
    }

    pub fn reference(&self) -> &ReferenceMeasure {
        &self.reference
    }

    pub fn kernel(&self) -> &KernelMatrix {
        &self.kernel
    }

    pub fn log_f0(&self) -> &[f64] {
        &self.log_f0
    }

    pub fn log_g1(&self) -> &[f64] {
        &self.log_g1
    }

    /// `f0` itself; fails if it overflows `f64`.
    pub fn f0(&self) -> Result<GridFunction> {
        GridFunction::new(*self.grid(), self.log_f0.iter().map(|v| v.exp()).collect())
    }

    pub fn g1(&self) -> Result<GridFunction> {
        GridFunction::new(*self.grid(), self.log_g1.iter().map(|v| v.exp()).collect())
    }

    pub fn cost_unscaled(&self) -> f64 {
        self.cost_unscaled
    }

    pub fn cost_scaled(&self) -> f64 {
        self.model.epsilon() * self.cost_unscaled
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Final sup-norm error of the reconstructed marginals, in Lebesgue
    /// density units.
    pub fn marginal_error(&self) -> f64 {
        self.marginal_error
    }

    /// Marginal error after each iteration.
    pub fn error_history(&self) -> &[f64] {
        &self.error_history
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// The same plan written with potentials `(c f0, g1 / c)`.
    pub fn regauged(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidInput(format!("gauge factor must be positive, got {c}")));
        }
        let lc = c.ln();
        let mut out = self.clone();
        out.log_f0.iter_mut().for_each(|v| *v += lc);
        out.log_g1.iter_mut().for_each(|v| *v -= lc);
        Ok(out)
    }

    /// `log T_t f0` on the grid.
    pub fn log_forward_potential(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.kernel_at(t)?.log_apply_values(&self.log_f0))
    }

    /// `log T_{1-t} g1` on the grid.
    pub fn log_backward_potential(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.kernel_at(1.0 - t)?.log_apply_values(&self.log_g1))
    }

    fn kernel_at(&self, t: f64) -> Result<KernelMatrix> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidInput(format!("t = {t} outside [0, 1]")));
        }
        if t == 1.0 {
            Ok(self.kernel.clone())
        } else {
            build_kernel(&self.model, t, self.grid())
        }
    }

    /// Reconstructed marginals `f0 T_1 g1 m` and `g1 T_1 f0 m`.
    pub fn reconstructed_marginals(&self) -> (Vec<f64>, Vec<f64>) {
        let lw = self.reference.log_weights();
        let ktg = self.kernel.log_apply_values(&self.log_g1);
        let ktf = self.kernel.log_apply_values(&self.log_f0);
        let m0 = self.log_f0.iter().zip(&ktg).zip(lw).map(|((a, b), c)| (a + b + c).exp()).collect();
        let m1 = self.log_g1.iter().zip(&ktf).zip(lw).map(|((a, b), c)| (a + b + c).exp()).collect();
        (m0, m1)
    }
}

/// Runs the iteration and returns the solution whether or not it met the
/// tolerance; see [`SchroedingerSolution::converged`].
pub fn run_ipfp(
    model: &KolmogorovModel,
    mu0: &GridDensity,
    mu1: &GridDensity,
    opts: SolverOptions,
) -> Result<SchroedingerSolution> {
    let grid = *mu0.grid();
    if *mu1.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", opts.tol)));
    }
    // Both marginals must carry the same mass for a coupling to exist;
    // GridDensity only guarantees unit mass to within quadrature tolerance.
    let mu0 = &GridDensity::normalized(grid, mu0.values().to_vec())?;
    let mu1 = &GridDensity::normalized(grid, mu1.values().to_vec())?;
    let reference = model.reference(&grid)?;
    let r0 = log_marginal_ratio(&reference, mu0)?;
    let r1 = log_marginal_ratio(&reference, mu1)?;
    let kernel = build_kernel(model, 1.0, &grid)?;
    let lw = reference.log_weights();

    let n = grid.len();
    let mut log_g = vec![0.0; n];
    let mut log_f = vec![0.0; n];
    let mut ktg = kernel.log_apply_values(&log_g);
    let mut history = Vec::new();
    let mut err = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.maxiter {
        iterations += 1;
        for i in 0..n {
            log_f[i] = r0[i] - ktg[i];
        }
        let ktf = kernel.log_apply_values(&log_f);
        for j in 0..n {
            log_g[j] = r1[j] - ktf[j];
        }
        ktg = kernel.log_apply_values(&log_g);
        let err0 = sup_error(&log_f, &ktg, lw, mu0.values());
        let err1 = sup_error(&log_g, &ktf, lw, mu1.values());
        err = err0.max(err1);
        history.push(err);
        if err <= opts.tol {
            break;
        }
    }
    let converged = err <= opts.tol;
    let cost_unscaled = potential_cost(&grid, &log_f, &log_g, mu0, mu1);
    Ok(SchroedingerSolution {
        model: *model,
        reference,
        kernel,
        log_f0: log_f,
        log_g1: log_g,
        cost_unscaled,
        iterations,
        marginal_error: err,
        error_history: history,
        converged,
    })
}

/// Solves the Schrödinger system between `mu0` and `mu1` on their common
/// grid with the model's kernel at time 1.
pub fn solve_schrodinger_system(
    model: &KolmogorovModel,
    mu0: &GridDensity,
    mu1: &GridDensity,
    opts: SolverOptions,
) -> Result<SchroedingerSolution> {
    let sol = run_ipfp(model, mu0, mu1, opts)?;
    if !sol.converged {
        return Err(Error::NonConvergence { iterations: sol.iterations, marginal_error: sol.marginal_error });
    }
    Ok(sol)
}

/// `H(π|R01) = ∫ log f0 dμ0 + ∫ log g1 dμ1` and its `ε` multiple.
pub fn entropic_cost(sol: &SchroedingerSolution, mu0: &GridDensity, mu1: &GridDensity) -> Result<EntropicCost> {
    if !sol.converged {
        return Err(Error::NotConverged);
    }
    if mu0.grid() != sol.grid() || mu1.grid() != sol.grid() {
        return Err(Error::GridMismatch);
    }
    let unscaled = potential_cost(sol.grid(), &sol.log_f0, &sol.log_g1, mu0, mu1);
    Ok(EntropicCost { unscaled, scaled: sol.model.epsilon() * unscaled })
}

/// `μ_t = T_t f0 · T_{1-t} g1 · m` as a Lebesgue density.
pub fn entropic_interpolation(sol: &SchroedingerSolution, t: f64, grid: &Grid) -> Result<GridDensity> {
    if !sol.converged {
        return Err(Error::NotConverged);
    }
    if grid != sol.grid() {
        return Err(Error::GridMismatch);
    }
    let fwd = sol.log_forward_potential(t)?;
    let bwd = sol.log_backward_potential(t)?;
    let values: Vec<f64> =
        fwd.iter().zip(&bwd).zip(sol.reference.log_weights()).map(|((a, b), c)| (a + b + c).exp()).collect();
    let mass = grid.integrate(&values);
    let drift = (mass - 1.0).abs();
    if drift > INTERPOLATION_MASS_DRIFT {
        return Err(Error::MassDrift { drift, limit: INTERPOLATION_MASS_DRIFT });
    }
    GridDensity::normalized(*grid, values)
}

fn log_marginal_ratio(reference: &ReferenceMeasure, mu: &GridDensity) -> Result<Vec<f64>> {
    if let Some(index) = mu.values().iter().position(|&v| v <= 0.0) {
        return Err(Error::ZeroMarginal { index });
    }
    reference.log_ratio(mu)
}

fn sup_error(log_a: &[f64], log_tb: &[f64], log_m: &[f64], target: &[f64]) -> f64 {
    log_a
        .iter()
        .zip(log_tb)
        .zip(log_m)
        .zip(target)
        .map(|(((a, b), c), t)| ((a + b + c).exp() - t).abs())
        .fold(0.0, f64::max)
}

fn potential_cost(grid: &Grid, log_f: &[f64], log_g: &[f64], mu0: &GridDensity, mu1: &GridDensity) -> f64 {
    let a: Vec<f64> = log_f.iter().zip(mu0.values()).map(|(l, p)| l * p).collect();
    let b: Vec<f64> = log_g.iter().zip(mu1.values()).map(|(l, p)| l * p).collect();
    grid.integrate(&a) + grid.integrate(&b)
}
