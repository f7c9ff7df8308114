//! Closed-form entropic bridges between `N(x0, 1)` and `N(x1, 1)`.
//!
//! Both reference dynamics keep the bridge Gaussian, so every slice is
//! described by a [`BridgeMoment`] and every velocity field is affine.
//!
//! Heat (`V = 0`, kernel variance `εt`): the bridge is `N(x_t, D_t)` with
//! `x_t = (1-t)x0 + t x1` and `D_t = α t(1-t) + 1`, where
//! `δ = (ε - 2 + √(4+ε²))/2` and `α = δ²/(1+δ)`.
//!
//! Ornstein-Uhlenbeck (`V = x²/2`): the endpoint coupling has the same
//! covariance as the stationary reference, so the bridge is a mean shift of
//! the stationary process. With `κ = e^{-ε/2}` and tilts
//! `(a, b) = K⁻¹ (x0, x1)`, `K = [[1, κ], [κ, 1]]`,
//!
//! ```text
//! m_t = a e^{-εt/2} + b e^{-ε(1-t)/2},   D_t = 1.
//! ```
//!
//! These are the forms the Sinkhorn solver converges to. The formulas with
//! a variance bump for OU live in [`printed`] and are kept for comparison.

use crate::error::{Error, Result};
use crate::measures::{gaussian_grid_density, GaussianMeasure, Grid, GridDensity, GridFunction};
use crate::semigroup::{KolmogorovModel, Potential};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatBridgeParams {
    pub epsilon: f64,
    pub x0: f64,
    pub x1: f64,
    pub delta: f64,
    pub alpha: f64,
    /// Linear coefficient of the dual potential, `2[x0 - (1+δ) x1]`.
    pub gamma: f64,
}

impl HeatBridgeParams {
    pub fn new(epsilon: f64, x0: f64, x1: f64) -> Self {
        let delta = heat_delta(epsilon);
        Self { epsilon, x0, x1, delta, alpha: delta * delta / (1.0 + delta), gamma: 2.0 * (x0 - (1.0 + delta) * x1) }
    }
}

/// `δ = (ε - 2 + √(4+ε²))/2`, written to avoid cancellation at small `ε`.
pub fn heat_delta(epsilon: f64) -> f64 {
    // ε - 2 + √(4+ε²) = ε + ε²/(2 + √(4+ε²))
    0.5 * (epsilon + epsilon * epsilon / (2.0 + (4.0 + epsilon * epsilon).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuBridgeParams {
    pub epsilon: f64,
    pub x0: f64,
    pub x1: f64,
    /// `e^{-ε/2}`, the correlation of the stationary endpoint law.
    pub decay: f64,
    /// Exponential tilt of the initial potential, `f0 ∝ e^{a x}`.
    pub tilt0: f64,
    /// Exponential tilt of the final potential, `g1 ∝ e^{b y}`.
    pub tilt1: f64,
}

impl OuBridgeParams {
    pub fn new(epsilon: f64, x0: f64, x1: f64) -> Self {
        let decay = (-0.5 * epsilon).exp();
        // 1 - κ² = 1 - e^{-ε}
        let det = -(-epsilon).exp_m1();
        Self { epsilon, x0, x1, decay, tilt0: (x0 - decay * x1) / det, tilt1: (x1 - decay * x0) / det }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BridgeParams {
    Heat(HeatBridgeParams),
    Ou(OuBridgeParams),
}

impl BridgeParams {
    pub fn new(model: &KolmogorovModel, x0: f64, x1: f64) -> Self {
        let eps = model.epsilon();
        match model.potential() {
            Potential::Zero => Self::Heat(HeatBridgeParams::new(eps, x0, x1)),
            Potential::Quadratic => Self::Ou(OuBridgeParams::new(eps, x0, x1)),
        }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            Self::Heat(p) => p.epsilon,
            Self::Ou(p) => p.epsilon,
        }
    }

    pub fn endpoints(&self) -> (f64, f64) {
        match self {
            Self::Heat(p) => (p.x0, p.x1),
            Self::Ou(p) => (p.x0, p.x1),
        }
    }
}

/// Mean and variance of a bridge slice with their time derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeMoment {
    pub t: f64,
    pub mean: f64,
    pub variance: f64,
    pub mean_rate: f64,
    pub variance_rate: f64,
}

impl BridgeMoment {
    pub fn gaussian(&self) -> Result<GaussianMeasure> {
        GaussianMeasure::new(self.mean, self.variance)
    }
}

/// How time derivatives of the moments are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateMethod {
    #[default]
    Analytic,
    /// Central differences of the moment curves (one-sided at the ends);
    /// for cross-checking the analytic rates.
    CentralDifference,
}

const RATE_STEP: f64 = 1e-5;

pub fn bridge_moments(model: &KolmogorovModel, x0: f64, x1: f64, t: f64) -> Result<BridgeMoment> {
    bridge_moments_with(model, x0, x1, t, RateMethod::Analytic)
}

pub fn bridge_moments_with(
    model: &KolmogorovModel,
    x0: f64,
    x1: f64,
    t: f64,
    rates: RateMethod,
) -> Result<BridgeMoment> {
    check_time(t)?;
    let params = BridgeParams::new(model, x0, x1);
    let mut mom = analytic_moment(&params, t);
    if rates == RateMethod::CentralDifference {
        let (lo, hi) = ((t - RATE_STEP).max(0.0), (t + RATE_STEP).min(1.0));
        let (a, b) = (analytic_moment(&params, lo), analytic_moment(&params, hi));
        mom.mean_rate = (b.mean - a.mean) / (hi - lo);
        mom.variance_rate = (b.variance - a.variance) / (hi - lo);
    }
    Ok(mom)
}

fn analytic_moment(params: &BridgeParams, t: f64) -> BridgeMoment {
    match params {
        BridgeParams::Heat(p) => {
            let (mean, variance) = if t == 0.0 {
                (p.x0, 1.0)
            } else if t == 1.0 {
                (p.x1, 1.0)
            } else {
                ((1.0 - t) * p.x0 + t * p.x1, p.alpha * t * (1.0 - t) + 1.0)
            };
            BridgeMoment { t, mean, variance, mean_rate: p.x1 - p.x0, variance_rate: p.alpha * (1.0 - 2.0 * t) }
        }
        BridgeParams::Ou(p) => {
            let eps = p.epsilon;
            let fwd = (-0.5 * eps * t).exp();
            let bwd = (-0.5 * eps * (1.0 - t)).exp();
            let mean = if t == 0.0 {
                p.x0
            } else if t == 1.0 {
                p.x1
            } else {
                p.tilt0 * fwd + p.tilt1 * bwd
            };
            BridgeMoment {
                t,
                mean,
                variance: 1.0,
                mean_rate: 0.5 * eps * (p.tilt1 * bwd - p.tilt0 * fwd),
                variance_rate: 0.0,
            }
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("t = {t} outside [0, 1]")))
    }
}

pub fn bridge_density(mom: &BridgeMoment, grid: &Grid) -> Result<GridDensity> {
    gaussian_grid_density(&mom.gaussian()?, grid)
}

/// Quadratic potential `q x² + l x` (constant fixed to zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticPotential {
    pub quadratic: f64,
    pub linear: f64,
}

impl QuadraticPotential {
    pub fn eval(&self, x: f64) -> f64 {
        (self.quadratic * x + self.linear) * x
    }

    pub fn gradient(&self, x: f64) -> f64 {
        2.0 * self.quadratic * x + self.linear
    }

    pub fn on_grid(&self, grid: &Grid) -> Result<GridFunction> {
        GridFunction::from_fn(*grid, |x| self.eval(x))
    }
}

/// The `ε`-scaled optimal dual potential `ψ_t = ε log T_{1-t} g1`, up to
/// an additive constant. Its gradient is the forward drift of the bridge.
pub fn dual_potential(params: &BridgeParams, t: f64) -> Result<QuadraticPotential> {
    check_time(t)?;
    Ok(match params {
        BridgeParams::Heat(p) => {
            let denom = 1.0 + p.delta * (1.0 - t);
            QuadraticPotential { quadratic: -0.5 * p.delta / denom, linear: -0.5 * p.gamma / denom }
        }
        BridgeParams::Ou(p) => {
            QuadraticPotential { quadratic: 0.0, linear: p.epsilon * p.tilt1 * (-0.5 * p.epsilon * (1.0 - t)).exp() }
        }
    })
}

/// Eulerian current velocity `v(z) = Ḋ/(2D) (z - m_t) + ṁ_t`.
pub fn current_velocity(mom: &BridgeMoment, grid: &Grid) -> Result<GridFunction> {
    GridFunction::from_fn(*grid, |z| current_velocity_at(mom, z))
}

pub fn current_velocity_at(mom: &BridgeMoment, z: f64) -> f64 {
    mom.variance_rate / (2.0 * mom.variance) * (z - mom.mean) + mom.mean_rate
}

/// Osmotic velocity `(ε/2) ∇ log(dμ_t/dm)` of a Gaussian slice.
pub fn osmotic_velocity_at(model: &KolmogorovModel, mom: &BridgeMoment, z: f64) -> f64 {
    0.5 * model.epsilon() * (-(z - mom.mean) / mom.variance + model.potential_gradient(z))
}

/// `x ↦ √D_t (x - x0) + m_t`, which pushes `N(x0, 1)` onto the slice.
pub fn pushforward_map(mom: &BridgeMoment, x: f64, x0: f64) -> f64 {
    mom.variance.sqrt() * (x - x0) + mom.mean
}

/// Transcriptions of the published OU formulas and the published heat
/// linear coefficient. They do not solve the Schrödinger system (see the
/// tests); they are kept to compare figures against.
pub mod printed {
    use super::*;

    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct PrintedOuParams {
        pub epsilon: f64,
        pub x0: f64,
        pub x1: f64,
        pub delta: f64,
        pub gamma: f64,
    }

    impl PrintedOuParams {
        pub fn new(epsilon: f64, x0: f64, x1: f64) -> Self {
            let e = (-epsilon).exp();
            let delta = (e - (e * e - e + 1.0).sqrt()) / (e - 1.0);
            let gamma = (x0 * (-0.5 * epsilon).exp() - x1 * (1.0 + delta - delta * e)) / (1.0 - e);
            Self { epsilon, x0, x1, delta, gamma }
        }

        fn a_and_rate(&self, t: f64) -> (f64, f64) {
            let (eps, d) = (self.epsilon, self.delta);
            let e = (-eps).exp();
            let num = 1.0 + d - d * e;
            let s = (-eps * t).exp() + (-eps * (1.0 - t)).exp();
            let ds = -eps * (-eps * t).exp() + eps * (-eps * (1.0 - t)).exp();
            let den = (1.0 - e) * (d * (1.0 + d) * s - 2.0 * d * d * e);
            let dden = (1.0 - e) * d * (1.0 + d) * ds;
            (num / den, -num * dden / (den * den))
        }

        fn mean_factor(&self, t: f64) -> (f64, f64) {
            let eps = self.epsilon;
            let ex = |c: f64| (-eps * c).exp();
            let c0 = ex(t / 2.0) - ex(1.0 - t / 2.0);
            let c1 = ex((1.0 - t) / 2.0) - ex((1.0 + t) / 2.0);
            let dc0 = -0.5 * eps * ex(t / 2.0) - 0.5 * eps * ex(1.0 - t / 2.0);
            let dc1 = 0.5 * eps * ex((1.0 - t) / 2.0) + 0.5 * eps * ex((1.0 + t) / 2.0);
            (c0 * self.x0 + c1 * self.x1, dc0 * self.x0 + dc1 * self.x1)
        }

        pub fn moments(&self, t: f64) -> Result<BridgeMoment> {
            check_time(t)?;
            let (a, da) = self.a_and_rate(t);
            let (l, dl) = self.mean_factor(t);
            let scale = 1.0 - (-self.epsilon).exp();
            Ok(BridgeMoment {
                t,
                mean: a * l,
                variance: -1.0 + 2.0 * scale * a,
                mean_rate: da * l + a * dl,
                variance_rate: 2.0 * scale * da,
            })
        }

        pub fn dual_potential(&self, t: f64) -> Result<QuadraticPotential> {
            check_time(t)?;
            let eps = self.epsilon;
            let denom = 1.0 + self.delta * (1.0 - (-eps * (1.0 - t)).exp());
            Ok(QuadraticPotential {
                quadratic: -0.5 * eps * self.delta * (-eps * (1.0 - t)).exp() / denom,
                linear: eps * self.gamma * (-0.5 * eps * (1.0 - t)).exp() / denom,
            })
        }
    }

    /// Published heat coefficient `2[x0(1+δ) - x1]`.
    pub fn heat_gamma(epsilon: f64, x0: f64, x1: f64) -> f64 {
        2.0 * (x0 * (1.0 + heat_delta(epsilon)) - x1)
    }
}
