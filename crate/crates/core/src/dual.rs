//! The Kantorovich-type dual of the scaled entropic cost.
//!
//! ```text
//! ε A(μ0, μ1) = ε H(μ0|m) + sup_ψ { ∫ψ dμ1 - ∫Q^ε_1 ψ dμ0 }
//! ```
//!
//! The supremum is never searched; the functional is evaluated at the
//! Sinkhorn optimizer `ε log g1` and at caller-supplied candidates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measures::{relative_entropy, GridDensity, GridFunction};
use crate::semigroup::{entropic_hopf_lax, KolmogorovModel};
use crate::sinkhorn::SchroedingerSolution;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualReport {
    /// Scaled entropic cost.
    pub primal: f64,
    /// Best value of the dual functional over the candidates.
    pub dual_value: f64,
    pub gap: f64,
}

pub fn dual_functional(
    model: &KolmogorovModel,
    mu0: &GridDensity,
    mu1: &GridDensity,
    psi: &GridFunction,
) -> Result<f64> {
    let grid = mu0.grid();
    if mu1.grid() != grid || psi.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let h0 = relative_entropy(mu0, &model.reference(grid)?)?;
    let q = entropic_hopf_lax(model, 1.0, psi)?;
    Ok(model.epsilon() * h0 + psi.integrate_against(mu1)? - q.integrate_against(mu0)?)
}

/// `ε log g1`, the optimal dual variable carried by a solution.
pub fn optimal_potential(sol: &SchroedingerSolution) -> Result<GridFunction> {
    let eps = sol.model().epsilon();
    GridFunction::new(*sol.grid(), sol.log_g1().iter().map(|l| eps * l).collect())
}

pub fn dual_gap(
    model: &KolmogorovModel,
    mu0: &GridDensity,
    mu1: &GridDensity,
    sol: &SchroedingerSolution,
    psi_candidates: &[GridFunction],
) -> Result<DualReport> {
    if !sol.converged() {
        return Err(Error::NotConverged);
    }
    if model != sol.model() {
        return Err(Error::ModelMismatch("dual model differs from the solution's".into()));
    }
    let primal = sol.cost_scaled();
    let mut dual_value = dual_functional(model, mu0, mu1, &optimal_potential(sol)?)?;
    for psi in psi_candidates {
        dual_value = dual_value.max(dual_functional(model, mu0, mu1, psi)?);
    }
    Ok(DualReport { primal, dual_value, gap: primal - dual_value })
}

/// `count` bounded candidates drawn from a fixed seed: even draws are
/// clamped quadratics plus a sine, odd draws perturb `star` by a sine.
pub fn random_candidates(star: &GridFunction, count: usize, seed: u64) -> Result<Vec<GridFunction>> {
    let grid = *star.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let (a, b, cap) = (rng.gen_range(-2.0..2.0), rng.gen_range(-8.0..8.0), rng.gen_range(5.0..60.0));
            let (amp, freq, phase) = (rng.gen_range(0.0..2.0), rng.gen_range(0.2..3.0), rng.gen_range(0.0..6.3));
            let wave = move |x: f64| amp * (freq * x + phase).sin();
            if k % 2 == 0 {
                GridFunction::from_fn(grid, |x| (a * x * x + b * x).clamp(-cap, cap) + wave(x))
            } else {
                GridFunction::new(grid, star.values().iter().zip(grid.points()).map(|(s, x)| s + wave(x)).collect())
            }
        })
        .collect()
}
