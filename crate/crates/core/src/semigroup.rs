//! Kolmogorov reference dynamics on a grid.
//!
//! Two potentials are built in: `V = 0` (heat, reversing measure Lebesgue)
//! and `V = x²/2` (Ornstein-Uhlenbeck, reversing measure `N(0,1)`). The
//! dilation `ε` is folded into the kernel clock, so a kernel "at time `t`"
//! is the undilated transition kernel at time `εt`:
//!
//! * heat: `y ~ N(x, εt)`
//! * OU:   `y ~ N(x e^{-εt/2}, 1 - e^{-εt})`
//!
//! Kernel entries are Lebesgue densities; trapezoid weights are folded in
//! at construction so that applying the semigroup is a matrix product.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::measures::{Grid, GridFunction, ReferenceKind, ReferenceMeasure, TOL_MASS};

/// Kernel rows whose Gaussian fits inside the grid within this many
/// standard deviations must carry unit mass.
pub const ROW_SPAN_SIGMAS: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Potential {
    /// `V = 0`
    Zero,
    /// `V(x) = x²/2`
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KolmogorovModel {
    potential: Potential,
    epsilon: f64,
}

impl KolmogorovModel {
    pub fn new(potential: Potential, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self { potential, epsilon })
    }

    pub fn heat(epsilon: f64) -> Result<Self> {
        Self::new(Potential::Zero, epsilon)
    }

    pub fn ornstein_uhlenbeck(epsilon: f64) -> Result<Self> {
        Self::new(Potential::Quadratic, epsilon)
    }

    /// Same potential, different dilation.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.potential, epsilon)
    }

    pub fn potential(&self) -> Potential {
        self.potential
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Lower bound on `Hess V`.
    pub fn lambda(&self) -> f64 {
        match self.potential {
            Potential::Zero => 0.0,
            Potential::Quadratic => 1.0,
        }
    }

    pub fn reference_kind(&self) -> ReferenceKind {
        match self.potential {
            Potential::Zero => ReferenceKind::Lebesgue,
            Potential::Quadratic => ReferenceKind::StandardGaussian,
        }
    }

    pub fn reference(&self, grid: &Grid) -> Result<ReferenceMeasure> {
        ReferenceMeasure::new(self.reference_kind(), *grid)
    }

    pub fn potential_at(&self, x: f64) -> f64 {
        match self.potential {
            Potential::Zero => 0.0,
            Potential::Quadratic => 0.5 * x * x,
        }
    }

    pub fn potential_gradient(&self, x: f64) -> f64 {
        match self.potential {
            Potential::Zero => 0.0,
            Potential::Quadratic => x,
        }
    }

    /// Mean and variance of the transition law from `x` after dilated time `t`.
    pub fn transition_moments(&self, x: f64, t: f64) -> (f64, f64) {
        let s = self.epsilon * t;
        match self.potential {
            Potential::Zero => (x, s),
            Potential::Quadratic => (x * (-0.5 * s).exp(), -(-s).exp_m1()),
        }
    }

    /// Evolves `N(mean, variance)` under the dynamics for dilated time `t`.
    pub fn evolve_gaussian(&self, mean: f64, variance: f64, t: f64) -> (f64, f64) {
        let s = self.epsilon * t;
        match self.potential {
            Potential::Zero => (mean, variance + s),
            Potential::Quadratic => {
                let decay = (-s).exp();
                (mean * (-0.5 * s).exp(), variance * decay + 1.0 - decay)
            }
        }
    }
}

#[derive(Debug, Clone)]
struct DenseKernel {
    /// `q_t(x_i, y_j) w_j`
    weighted: Array2<f64>,
    /// `log q_t(x_i, y_j) + log w_j`, finite where `weighted` underflows.
    log_weighted: Array2<f64>,
}

/// Transition operator `T_t` on a grid. At `t = 0` it is the identity and
/// holds no matrix.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    model: KolmogorovModel,
    t: f64,
    grid: Grid,
    dense: Option<DenseKernel>,
}

impl KernelMatrix {
    pub fn model(&self) -> &KolmogorovModel {
        &self.model
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn is_identity(&self) -> bool {
        self.dense.is_none()
    }

    /// Lebesgue density `q_t(x_i, y_j)`. Not available for the identity.
    pub fn entry(&self, i: usize, j: usize) -> Option<f64> {
        self.dense.as_ref()?;
        let (mean, var) = self.model.transition_moments(self.grid.point(i), self.t);
        let y = self.grid.point(j);
        Some((-(y - mean).powi(2) / (2.0 * var)).exp() / (2.0 * PI * var).sqrt())
    }

    /// Trapezoid mass of row `i`; 1 for the identity.
    pub fn row_mass(&self, i: usize) -> f64 {
        match &self.dense {
            None => 1.0,
            Some(d) => d.weighted.row(i).sum(),
        }
    }

    pub(crate) fn apply_values(&self, f: &[f64]) -> Vec<f64> {
        match &self.dense {
            None => f.to_vec(),
            Some(d) => d.weighted.dot(&ndarray::ArrayView1::from(f)).to_vec(),
        }
    }

    /// `log T_t(e^{log_f})`, evaluated row by row with a max shift.
    /// Entries of `log_f` may be `-inf`.
    pub(crate) fn log_apply_values(&self, log_f: &[f64]) -> Vec<f64> {
        let Some(d) = &self.dense else {
            return log_f.to_vec();
        };
        d.log_weighted
            .rows()
            .into_iter()
            .map(|row| {
                let row = row.as_slice().expect("standard layout");
                let max = row.iter().zip(log_f).map(|(k, f)| k + f).fold(f64::NEG_INFINITY, f64::max);
                if !max.is_finite() {
                    return max;
                }
                let sum: f64 = row.iter().zip(log_f).map(|(k, f)| (k + f - max).exp()).sum();
                max + sum.ln()
            })
            .collect()
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        GridFunction::new(self.grid, self.apply_values(f.values()))
    }

    /// `log T_t(e^{g})` for a grid function `g`.
    pub fn log_apply(&self, g: &GridFunction) -> Result<GridFunction> {
        if *g.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        GridFunction::new(self.grid, self.log_apply_values(g.values()))
    }
}

/// Builds `T_t` on `grid` for the model's dilated clock.
pub fn build_kernel(model: &KolmogorovModel, t: f64, grid: &Grid) -> Result<KernelMatrix> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidInput(format!("kernel time must be nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(KernelMatrix { model: *model, t, grid: *grid, dense: None });
    }
    let n = grid.len();
    let xs: Vec<f64> = grid.points().collect();
    let log_w: Vec<f64> = grid.weights().iter().map(|w| w.ln()).collect();
    let mut log_weighted = Array2::<f64>::zeros((n, n));
    let (_, var) = model.transition_moments(0.0, t);
    let log_norm = -0.5 * (2.0 * PI * var).ln();
    for (i, mut row) in log_weighted.rows_mut().into_iter().enumerate() {
        let (mean, _) = model.transition_moments(xs[i], t);
        for (j, v) in row.iter_mut().enumerate() {
            *v = -(xs[j] - mean).powi(2) / (2.0 * var) + log_norm + log_w[j];
        }
    }
    let weighted = log_weighted.mapv(f64::exp);

    let sd = var.sqrt();
    let mut resolved = 0usize;
    let mut worst: Option<(usize, f64)> = None;
    for (i, &x) in xs.iter().enumerate() {
        let (mean, _) = model.transition_moments(x, t);
        if !grid.covers(mean - ROW_SPAN_SIGMAS * sd, mean + ROW_SPAN_SIGMAS * sd) {
            continue;
        }
        resolved += 1;
        let mass = weighted.row(i).sum();
        let dev = (mass - 1.0).abs();
        if worst.is_none_or(|(_, m)| dev > (m - 1.0).abs()) {
            worst = Some((i, mass));
        }
    }
    match worst {
        None => {
            let mid = n / 2;
            return Err(Error::KernelTruncation { row: mid, captured: weighted.row(mid).sum() });
        }
        Some((row, captured)) if (captured - 1.0).abs() > TOL_MASS => {
            return Err(Error::KernelTruncation { row, captured });
        }
        _ => {}
    }
    debug_assert!(resolved > 0);

    Ok(KernelMatrix { model: *model, t, grid: *grid, dense: Some(DenseKernel { weighted, log_weighted }) })
}

/// `T_t f` by trapezoid quadrature against each kernel row.
pub fn apply_semigroup(kernel: &KernelMatrix, f: &GridFunction) -> Result<GridFunction> {
    kernel.apply(f)
}

/// `Q^ε_u ψ = ε log T_u(e^{ψ/ε})` in the dilated clock.
pub fn entropic_hopf_lax(model: &KolmogorovModel, u: f64, psi: &GridFunction) -> Result<GridFunction> {
    let kernel = build_kernel(model, u, psi.grid())?;
    hopf_lax_with_kernel(&kernel, psi)
}

/// [`entropic_hopf_lax`] with a prebuilt `T_u`.
pub fn hopf_lax_with_kernel(kernel: &KernelMatrix, psi: &GridFunction) -> Result<GridFunction> {
    if *psi.grid() != kernel.grid {
        return Err(Error::GridMismatch);
    }
    if psi.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("ψ must be finite".into()));
    }
    let eps = kernel.model.epsilon;
    let scaled: Vec<f64> = psi.values().iter().map(|v| v / eps).collect();
    let out = kernel.log_apply_values(&scaled).into_iter().map(|v| eps * v).collect();
    GridFunction::new(kernel.grid, out)
}
