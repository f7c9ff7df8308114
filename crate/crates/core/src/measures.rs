//! Grids, grid densities, reference measures and the Gaussian closed forms
//! of quadratic optimal transport that serve as small-noise references.
//!
//! Every integral in the crate is a composite trapezoid rule on a uniform
//! [`Grid`]. Densities are always stored with respect to Lebesgue measure;
//! the reversing measure `m` enters through [`ReferenceMeasure`] weights.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Mass tolerance every [`GridDensity`] satisfies after construction.
pub const TOL_MASS: f64 = 1e-6;

/// Half-width, in standard deviations, that a grid must cover around a
/// Gaussian for its truncation to be negligible.
pub const GAUSSIAN_SPAN_SIGMAS: f64 = 8.0;

/// Uniform grid on `[lo, hi]` with `n` points, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    lo: f64,
    hi: f64,
    n: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite bounds [{lo}, {hi}]")));
        }
        if lo >= hi {
            return Err(Error::InvalidGrid(format!("lo = {lo} must be below hi = {hi}")));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 points, got {n}")));
        }
        Ok(Self { lo, hi, n })
    }

    /// Grid used for unit-variance marginals centred at `x0` and `x1`:
    /// eight standard deviations of margin on each side, 512 points.
    pub fn for_endpoints(x0: f64, x1: f64) -> Result<Self> {
        Self::new(x0.min(x1) - 8.0, x0.max(x1) + 8.0, 512)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.point(i))
    }

    /// Trapezoid quadrature weights.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = vec![h; self.n];
        w[0] = 0.5 * h;
        w[self.n - 1] = 0.5 * h;
        w
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n);
        let inner: f64 = values[1..self.n - 1].iter().sum();
        self.spacing() * (inner + 0.5 * (values[0] + values[self.n - 1]))
    }

    /// Same interval with half the spacing.
    pub fn refined(&self) -> Self {
        Self { lo: self.lo, hi: self.hi, n: 2 * self.n - 1 }
    }

    /// Whether `[a, b]` lies inside the grid interval.
    pub fn covers(&self, a: f64, b: f64) -> bool {
        a >= self.lo && b <= self.hi
    }
}

/// Real-valued samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!("{} values for a grid of {} points", values.len(), grid.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite value at index {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.points().map(f).collect())
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.len()])
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().copied().map(f).collect())
    }

    /// `∫ self dμ` for a density `μ` on the same grid.
    pub fn integrate_against(&self, mu: &GridDensity) -> Result<f64> {
        if self.grid != mu.grid {
            return Err(Error::GridMismatch);
        }
        let prod: Vec<f64> = self.values.iter().zip(&mu.values).map(|(f, p)| f * p).collect();
        Ok(self.grid.integrate(&prod))
    }
}

/// Probability density with respect to Lebesgue measure, sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    grid: Grid,
    values: Vec<f64>,
}

impl GridDensity {
    /// Validates nonnegativity and unit trapezoid mass within [`TOL_MASS`].
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        check_samples(&grid, &values)?;
        let mass = grid.integrate(&values);
        if (mass - 1.0).abs() > TOL_MASS {
            return Err(Error::MassDeficit { captured: mass, tol: TOL_MASS });
        }
        Ok(Self { grid, values })
    }

    /// Rescales `values` to unit mass. Fails only when the mass is zero.
    pub fn normalized(grid: Grid, mut values: Vec<f64>) -> Result<Self> {
        check_samples(&grid, &values)?;
        let mass = grid.integrate(&values);
        if mass <= 0.0 {
            return Err(Error::MassDeficit { captured: mass, tol: TOL_MASS });
        }
        values.iter_mut().for_each(|v| *v /= mass);
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn mean(&self) -> f64 {
        let xs: Vec<f64> = self.grid.points().zip(&self.values).map(|(x, p)| x * p).collect();
        self.grid.integrate(&xs)
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let xs: Vec<f64> = self.grid.points().zip(&self.values).map(|(x, p)| (x - m).powi(2) * p).collect();
        self.grid.integrate(&xs)
    }

    /// `sup_i |self_i − other_i|`.
    pub fn sup_distance(&self, other: &GridDensity) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self.values.iter().zip(&other.values).fold(0.0, |acc, (a, b)| acc.max((a - b).abs())))
    }
}

fn check_samples(grid: &Grid, values: &[f64]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::InvalidInput(format!("{} values for a grid of {} points", values.len(), grid.len())));
    }
    if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidInput(format!(
            "density value {} at index {i} is not a finite nonnegative number",
            values[i]
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceKind {
    Lebesgue,
    StandardGaussian,
}

/// Reversing measure `m = e^{-V} Leb` (normalised for the Gaussian case),
/// stored as its Lebesgue density at the grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceMeasure {
    kind: ReferenceKind,
    grid: Grid,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
}

impl ReferenceMeasure {
    pub fn new(kind: ReferenceKind, grid: Grid) -> Result<Self> {
        let log_weights: Vec<f64> = match kind {
            ReferenceKind::Lebesgue => vec![0.0; grid.len()],
            ReferenceKind::StandardGaussian => grid.points().map(|x| -0.5 * x * x - 0.5 * (2.0 * PI).ln()).collect(),
        };
        let weights: Vec<f64> = log_weights.iter().map(|l| l.exp()).collect();
        if kind == ReferenceKind::StandardGaussian {
            let mass = grid.integrate(&weights);
            if (mass - 1.0).abs() > TOL_MASS {
                return Err(Error::MassDeficit { captured: mass, tol: TOL_MASS });
            }
        }
        Ok(Self { kind, grid, weights, log_weights })
    }

    pub fn kind(&self) -> ReferenceKind {
        self.kind
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Lebesgue density of `m` at the grid points.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Logarithm of [`Self::weights`], evaluated analytically so that it
    /// stays finite where the weights underflow.
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// `log(dp/dm)` at each grid point, `-inf` where `p` vanishes.
    pub fn log_ratio(&self, p: &GridDensity) -> Result<Vec<f64>> {
        if p.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        p.values
            .iter()
            .zip(&self.weights)
            .zip(&self.log_weights)
            .enumerate()
            .map(
                |(i, ((&pv, &w), &lw))| {
                    if pv > 0.0 && w == 0.0 {
                        Err(Error::AbsoluteContinuity { index: i })
                    } else {
                        Ok(pv.ln() - lw)
                    }
                },
            )
            .collect()
    }
}

/// `N(mean, variance)` on the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMeasure {
    mean: f64,
    variance: f64,
}

impl GaussianMeasure {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite mean {mean}")));
        }
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::InvalidInput(format!("variance must be positive, got {variance}")));
        }
        Ok(Self { mean, variance })
    }

    pub fn standard() -> Self {
        Self { mean: 0.0, variance: 1.0 }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn log_density(&self, x: f64) -> f64 {
        -0.5 * (x - self.mean).powi(2) / self.variance - 0.5 * (2.0 * PI * self.variance).ln()
    }

    pub fn density(&self, x: f64) -> f64 {
        self.log_density(x).exp()
    }
}

/// Samples the Lebesgue density of `g` on `grid`.
pub fn gaussian_grid_density(g: &GaussianMeasure, grid: &Grid) -> Result<GridDensity> {
    let values: Vec<f64> = grid.points().map(|x| g.density(x)).collect();
    GridDensity::new(*grid, values)
}

/// `H(p | m) = ∫ log(dp/dm) dp`, with `0 log 0 = 0`. May be negative when
/// `m` is Lebesgue.
pub fn relative_entropy(p: &GridDensity, r: &ReferenceMeasure) -> Result<f64> {
    let log_ratio = r.log_ratio(p)?;
    let integrand: Vec<f64> =
        p.values.iter().zip(&log_ratio).map(|(&pv, &lr)| if pv > 0.0 { pv * lr } else { 0.0 }).collect();
    Ok(p.grid.integrate(&integrand))
}

/// Squared quadratic Wasserstein distance between one-dimensional Gaussians.
pub fn wasserstein2_gaussian(g0: &GaussianMeasure, g1: &GaussianMeasure) -> f64 {
    (g0.mean - g1.mean).powi(2) + (g0.std_dev() - g1.std_dev()).powi(2)
}

/// Displacement interpolation between equal-variance Gaussians.
pub fn mccann_interpolation(g0: &GaussianMeasure, g1: &GaussianMeasure, t: f64) -> Result<GaussianMeasure> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!("t = {t} outside [0, 1]")));
    }
    if (g0.variance - g1.variance).abs() > 1e-12 * g0.variance.max(g1.variance) {
        return Err(Error::Unsupported(format!(
            "displacement interpolation is implemented for equal variances only ({} vs {})",
            g0.variance, g1.variance
        )));
    }
    GaussianMeasure::new((1.0 - t) * g0.mean + t * g1.mean, g0.variance)
}
