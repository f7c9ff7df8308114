//! `key = value` problem files. Blank lines and `#` comments are ignored;
//! unknown or repeated keys are errors reported with their line number.

use std::collections::HashSet;
use std::path::Path;
use std::str::FromStr;

use bridgekit_core::measures::{gaussian_grid_density, GaussianMeasure, GridDensity};
use bridgekit_core::{Grid, KolmogorovModel, SolverOptions};

use crate::error::{CliError, CliResult};

pub const MIN_GRID_N: usize = 64;
pub const MIN_TIME_SAMPLES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelChoice {
    Heat,
    Ou,
}

impl FromStr for KernelChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "heat" => Ok(Self::Heat),
            "ou" => Ok(Self::Ou),
            _ => Err(format!("kernel must be `heat` or `ou`, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub kernel: KernelChoice,
    pub epsilon: f64,
    pub x0: f64,
    pub x1: f64,
    /// Defaults to eight units beyond the lower endpoint.
    pub grid_lo: Option<f64>,
    /// Defaults to eight units beyond the upper endpoint.
    pub grid_hi: Option<f64>,
    pub grid_n: usize,
    pub time_samples: usize,
    pub tol: f64,
    pub maxiter: usize,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            kernel: KernelChoice::Heat,
            epsilon: 1.0,
            x0: -3.0,
            x1: 3.0,
            grid_lo: None,
            grid_hi: None,
            grid_n: 512,
            time_samples: 41,
            tol: 1e-9,
            maxiter: 100_000,
        }
    }
}

impl ProblemConfig {
    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source_name: &str) -> CliResult<Self> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let err = |message: String| CliError::Config { source_name: source_name.to_owned(), line, message };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) =
                content.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_owned()) {
                return Err(err(format!("`{key}` set twice")));
            }
            cfg.set(key, value).map_err(err)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
            value.parse().map_err(|_| format!("`{key}`: cannot parse `{value}`"))
        }
        match key {
            "kernel" => self.kernel = value.parse()?,
            "epsilon" => self.epsilon = num(key, value)?,
            "x0" => self.x0 = num(key, value)?,
            "x1" => self.x1 = num(key, value)?,
            "grid_lo" => self.grid_lo = Some(num(key, value)?),
            "grid_hi" => self.grid_hi = Some(num(key, value)?),
            "grid_n" => self.grid_n = num(key, value)?,
            "time_samples" => self.time_samples = num(key, value)?,
            "tol" => self.tol = num(key, value)?,
            "maxiter" => self.maxiter = num(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::InvalidConfig(m));
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.x0.is_finite() && self.x1.is_finite()) {
            return bad("x0 and x1 must be finite".into());
        }
        if self.grid_n < MIN_GRID_N {
            return bad(format!("grid_n must be at least {MIN_GRID_N}, got {}", self.grid_n));
        }
        if self.time_samples < MIN_TIME_SAMPLES {
            return bad(format!("time_samples must be at least {MIN_TIME_SAMPLES}, got {}", self.time_samples));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.maxiter == 0 {
            return bad("maxiter must be positive".into());
        }
        let (lo, hi) = self.grid_bounds();
        if !(lo < hi) {
            return bad(format!("grid_lo ({lo}) must be below grid_hi ({hi})"));
        }
        Ok(())
    }

    pub fn grid_bounds(&self) -> (f64, f64) {
        let lo = self.grid_lo.unwrap_or(self.x0.min(self.x1) - 8.0);
        let hi = self.grid_hi.unwrap_or(self.x0.max(self.x1) + 8.0);
        (lo, hi)
    }

    pub fn grid(&self) -> CliResult<Grid> {
        let (lo, hi) = self.grid_bounds();
        Ok(Grid::new(lo, hi, self.grid_n)?)
    }

    pub fn model(&self) -> CliResult<KolmogorovModel> {
        self.model_for(self.kernel, self.epsilon)
    }

    pub fn model_for(&self, kernel: KernelChoice, epsilon: f64) -> CliResult<KolmogorovModel> {
        Ok(match kernel {
            KernelChoice::Heat => KolmogorovModel::heat(epsilon)?,
            KernelChoice::Ou => KolmogorovModel::ornstein_uhlenbeck(epsilon)?,
        })
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions { tol: self.tol, maxiter: self.maxiter }
    }

    /// `N(x0, 1)` and `N(x1, 1)` on the configured grid.
    pub fn marginals(&self) -> CliResult<(GridDensity, GridDensity)> {
        let grid = self.grid()?;
        let mu = |x| -> CliResult<GridDensity> { Ok(gaussian_grid_density(&GaussianMeasure::new(x, 1.0)?, &grid)?) };
        Ok((mu(self.x0)?, mu(self.x1)?))
    }
}
