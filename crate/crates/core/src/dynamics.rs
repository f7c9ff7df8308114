//! Benamou-Brenier style actions along a bridge.
//!
//! A [`BridgePath`] samples densities and velocity fields of an entropic
//! interpolation at a set of times. Actions are kept in unscaled entropy
//! units: in the ε-dilated clock the Girsanov action is `(1/2ε)∫∫|β|²`.

use crate::error::{Error, Result};
use crate::gaussian_bridge::{
    bridge_density, bridge_moments, current_velocity_at, dual_potential, osmotic_velocity_at, BridgeParams,
};
use crate::measures::{Grid, GridDensity, GridFunction};
use crate::numdiff::central_gradient;
use crate::semigroup::KolmogorovModel;
use crate::sinkhorn::{entropic_interpolation, SchroedingerSolution};

pub const DEFAULT_TIME_SAMPLES: usize = 41;

/// Velocities are set to zero where the density is at or below this value.
pub const DENSITY_FLOOR: f64 = 1e-12;

/// Largest tolerated fraction of underflowed points inside the support.
pub const MAX_UNDERFLOW_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy)]
pub enum PathSource<'a> {
    ClosedForm { model: KolmogorovModel, x0: f64, x1: f64 },
    Sinkhorn(&'a SchroedingerSolution),
}

#[derive(Debug, Clone)]
pub struct BridgePath {
    model: KolmogorovModel,
    grid: Grid,
    times: Vec<f64>,
    densities: Vec<GridDensity>,
    forward_drift: Vec<GridFunction>,
    current_velocity: Vec<GridFunction>,
    osmotic_velocity: Vec<GridFunction>,
}

impl BridgePath {
    pub fn model(&self) -> &KolmogorovModel {
        &self.model
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn densities(&self) -> &[GridDensity] {
        &self.densities
    }

    pub fn forward_drift(&self) -> &[GridFunction] {
        &self.forward_drift
    }

    pub fn current_velocity(&self) -> &[GridFunction] {
        &self.current_velocity
    }

    pub fn osmotic_velocity(&self) -> &[GridFunction] {
        &self.osmotic_velocity
    }

    /// The path of the time-reversed bridge: `t ↦ 1 - t`, current velocity
    /// negated, osmotic velocity unchanged.
    pub fn time_reversed(&self) -> Result<Self> {
        let rev = |v: &[GridFunction], sign: f64| -> Result<Vec<GridFunction>> {
            v.iter().rev().map(|f| f.map(|x| sign * x)).collect()
        };
        let current_velocity = rev(&self.current_velocity, -1.0)?;
        let osmotic_velocity = rev(&self.osmotic_velocity, 1.0)?;
        let forward_drift = current_velocity
            .iter()
            .zip(&osmotic_velocity)
            .map(|(c, o)| {
                let v = c.values().iter().zip(o.values()).map(|(a, b)| a + b).collect();
                GridFunction::new(self.grid, v)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            model: self.model,
            grid: self.grid,
            times: self.times.iter().rev().map(|t| 1.0 - t).collect(),
            densities: self.densities.iter().rev().cloned().collect(),
            forward_drift,
            current_velocity,
            osmotic_velocity,
        })
    }
}

/// `count` equally spaced times from 0 to 1.
pub fn uniform_times(count: usize) -> Vec<f64> {
    let last = count.saturating_sub(1).max(1) as f64;
    (0..count).map(|k| k as f64 / last).collect()
}

pub fn build_path(source: PathSource<'_>, times: &[f64], grid: &Grid) -> Result<BridgePath> {
    check_times(times)?;
    let model = match source {
        PathSource::ClosedForm { model, .. } => model,
        PathSource::Sinkhorn(sol) => *sol.model(),
    };
    let n = times.len();
    let mut path = BridgePath {
        model,
        grid: *grid,
        times: times.to_vec(),
        densities: Vec::with_capacity(n),
        forward_drift: Vec::with_capacity(n),
        current_velocity: Vec::with_capacity(n),
        osmotic_velocity: Vec::with_capacity(n),
    };
    for &t in times {
        let (density, beta, v_os) = match source {
            PathSource::ClosedForm { model, x0, x1 } => closed_form_slice(&model, x0, x1, t, grid)?,
            PathSource::Sinkhorn(sol) => sinkhorn_slice(sol, t, grid)?,
        };
        check_underflow(&density)?;
        let mut b = beta;
        let mut o = v_os;
        let mut c = vec![0.0; grid.len()];
        for i in 0..grid.len() {
            if density.values()[i] <= DENSITY_FLOOR {
                b[i] = 0.0;
                o[i] = 0.0;
            }
            c[i] = b[i] - o[i];
        }
        path.densities.push(density);
        path.forward_drift.push(GridFunction::new(*grid, b)?);
        path.current_velocity.push(GridFunction::new(*grid, c)?);
        path.osmotic_velocity.push(GridFunction::new(*grid, o)?);
    }
    Ok(path)
}

type Slice = (GridDensity, Vec<f64>, Vec<f64>);

fn closed_form_slice(model: &KolmogorovModel, x0: f64, x1: f64, t: f64, grid: &Grid) -> Result<Slice> {
    let mom = bridge_moments(model, x0, x1, t)?;
    let psi = dual_potential(&BridgeParams::new(model, x0, x1), t)?;
    let density = bridge_density(&mom, grid)?;
    let beta = grid.points().map(|z| psi.gradient(z)).collect();
    let v_os = grid.points().map(|z| osmotic_velocity_at(model, &mom, z)).collect();
    // the construction identity the rest of the module relies on
    debug_assert!(grid.points().all(|z| {
        let lhs = psi.gradient(z);
        let rhs = current_velocity_at(&mom, z) + osmotic_velocity_at(model, &mom, z);
        (lhs - rhs).abs() <= 1e-6 * (1.0 + lhs.abs())
    }));
    Ok((density, beta, v_os))
}

fn sinkhorn_slice(sol: &SchroedingerSolution, t: f64, grid: &Grid) -> Result<Slice> {
    let density = entropic_interpolation(sol, t, grid)?;
    let eps = sol.model().epsilon();
    let h = grid.spacing();
    let fwd = sol.log_forward_potential(t)?;
    let bwd = sol.log_backward_potential(t)?;
    // dμ_t/dm = T_t f0 · T_{1-t} g1, so ∇log ρ needs no division by the density
    let log_rho: Vec<f64> = fwd.iter().zip(&bwd).map(|(a, b)| a + b).collect();
    let beta = central_gradient(&bwd, h).into_iter().map(|g| eps * g).collect();
    let v_os = central_gradient(&log_rho, h).into_iter().map(|g| 0.5 * eps * g).collect();
    Ok((density, beta, v_os))
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.len() < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 time samples, got {}", times.len())));
    }
    if times[0] != 0.0 || times[times.len() - 1] != 1.0 {
        return Err(Error::InvalidInput("time samples must start at 0 and end at 1".into()));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("time samples must be strictly increasing".into()));
    }
    Ok(())
}

/// Fails when more than a fifth of the points between the first and last
/// resolved point have underflowed.
fn check_underflow(density: &GridDensity) -> Result<()> {
    let v = density.values();
    let resolved = |x: &f64| *x > DENSITY_FLOOR;
    let (Some(first), Some(last)) = (v.iter().position(resolved), v.iter().rposition(resolved)) else {
        return Err(Error::IllConditionedPath { fraction: 1.0 });
    };
    let holes = v[first..=last].iter().filter(|x| !resolved(x)).count();
    let fraction = holes as f64 / (last - first + 1) as f64;
    if fraction > MAX_UNDERFLOW_FRACTION {
        return Err(Error::IllConditionedPath { fraction });
    }
    Ok(())
}

/// Trapezoid rule on possibly uneven samples.
pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times.windows(2).zip(values.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum()
}

fn kinetic(path: &BridgePath, field: &[GridFunction]) -> f64 {
    let per_time: Vec<f64> = field
        .iter()
        .zip(&path.densities)
        .map(|(v, mu)| {
            let e: Vec<f64> = v.values().iter().zip(mu.values()).map(|(x, p)| 0.5 * x * x * p).collect();
            path.grid.integrate(&e)
        })
        .collect();
    trapezoid(&path.times, &per_time) / path.model.epsilon()
}

/// `(1/ε) ∫∫ ½|β|² dμ_t dt`.
pub fn forward_action(path: &BridgePath) -> f64 {
    kinetic(path, &path.forward_drift)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decomposition {
    pub current_action: f64,
    pub osmotic_action: f64,
    pub total: f64,
}

pub fn symmetric_decomposition(path: &BridgePath, h0: f64, h1: f64) -> Decomposition {
    let current_action = kinetic(path, &path.current_velocity);
    let osmotic_action = kinetic(path, &path.osmotic_velocity);
    Decomposition { current_action, osmotic_action, total: 0.5 * (h0 + h1) + current_action + osmotic_action }
}

/// `(1/ε) ∫∫ ⟨v^cu, v^os⟩ dμ_t dt`, which equals `½(H(μ1|m) - H(μ0|m))`
/// because `(ε/2)·d/dt H(μ_t|m) = ∫ ⟨v^cu, v^os⟩ dμ_t`.
pub fn velocity_cross_term(path: &BridgePath) -> f64 {
    let per_time: Vec<f64> = (0..path.times.len())
        .map(|k| {
            let c = path.current_velocity[k].values();
            let o = path.osmotic_velocity[k].values();
            let p = path.densities[k].values();
            let e: Vec<f64> = (0..c.len()).map(|i| c[i] * o[i] * p[i]).collect();
            path.grid.integrate(&e)
        })
        .collect();
    trapezoid(&path.times, &per_time) / path.model.epsilon()
}

/// The scaled lower bound `ε·A ≥ (ε/2)(H0+H1) + W2²/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBound {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

pub fn cost_lower_bound(epsilon: f64, cost_unscaled: f64, h0: f64, h1: f64, w2_squared: f64) -> LowerBound {
    let lhs = epsilon * cost_unscaled;
    let rhs = 0.5 * epsilon * (h0 + h1) + 0.5 * w2_squared;
    LowerBound { lhs, rhs, slack: lhs - rhs }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContinuityForm {
    /// `∂_t μ + ∇·(μ v^cu) = 0`.
    Current,
    /// `∂_t μ + ∇·(μ β - (ε/2)(μ ∇V + ∇μ)) = 0`, the forward equation.
    FokkerPlanck,
    /// `∂_t ρ + e^V ∇·(e^{-V} ρ v^cu) = 0` with `ρ = dμ/dm`, measured in `L¹(m)`.
    Weighted,
}

/// Max over interior times of the `L¹` residual of the chosen equation.
///
/// Space derivatives are fourth-order central differences. The time
/// derivative `(q_{k+1} - q_{k-1}) / (t_{k+1} - t_{k-1})` is balanced
/// against the Simpson average of the flux term over `[t_{k-1}, t_{k+1}]`,
/// so the scheme is consistent for the window average, not just the
/// centre point.
pub fn continuity_residual(path: &BridgePath, form: ContinuityForm) -> f64 {
    let grid = path.grid;
    let h = grid.spacing();
    let model = path.model;
    let eps = model.epsilon();
    let reference = model.reference(&grid).expect("path grid already carries the reference");
    let m = reference.weights();
    let pot: Vec<f64> = grid.points().map(|z| model.potential_at(z)).collect();

    // conserved quantity q_k and divergence term d_k for every time sample
    let mut qs = Vec::with_capacity(path.times.len());
    let mut ds = Vec::with_capacity(path.times.len());
    for k in 0..path.times.len() {
        let mu = path.densities[k].values();
        let (q, d) = match form {
            ContinuityForm::Current => {
                let flux: Vec<f64> = mu.iter().zip(path.current_velocity[k].values()).map(|(p, v)| p * v).collect();
                (mu.to_vec(), central_gradient(&flux, h))
            }
            ContinuityForm::FokkerPlanck => {
                let grad_mu = central_gradient(mu, h);
                let flux: Vec<f64> = (0..mu.len())
                    .map(|i| {
                        let drift =
                            path.forward_drift[k].values()[i] - 0.5 * eps * model.potential_gradient(grid.point(i));
                        mu[i] * drift - 0.5 * eps * grad_mu[i]
                    })
                    .collect();
                (mu.to_vec(), central_gradient(&flux, h))
            }
            ContinuityForm::Weighted => {
                let rho: Vec<f64> = mu.iter().zip(m).map(|(p, w)| if *w > 0.0 { p / w } else { 0.0 }).collect();
                let flux: Vec<f64> =
                    (0..mu.len()).map(|i| (-pot[i]).exp() * rho[i] * path.current_velocity[k].values()[i]).collect();
                let div = central_gradient(&flux, h).into_iter().zip(&pot).map(|(g, v)| v.exp() * g).collect();
                (rho, div)
            }
        };
        qs.push(q);
        ds.push(d);
    }

    let weight: Vec<f64> = match form {
        ContinuityForm::Weighted => m.to_vec(),
        _ => vec![1.0; grid.len()],
    };
    let mut worst: f64 = 0.0;
    for k in 1..path.times.len() - 1 {
        let (h1, h2) = (path.times[k] - path.times[k - 1], path.times[k + 1] - path.times[k]);
        let span = h1 + h2;
        // three-point Simpson weights on uneven halves, divided by the span
        let w0 = (2.0 * h1 - h2) / (6.0 * h1);
        let w1 = span * span / (6.0 * h1 * h2);
        let w2 = (2.0 * h2 - h1) / (6.0 * h2);
        let r: Vec<f64> = (0..grid.len())
            .map(|i| {
                let dq = (qs[k + 1][i] - qs[k - 1][i]) / span;
                let div = w0 * ds[k - 1][i] + w1 * ds[k][i] + w2 * ds[k + 1][i];
                weight[i] * (dq + div).abs()
            })
            .collect();
        worst = worst.max(grid.integrate(&r));
    }
    worst
}
