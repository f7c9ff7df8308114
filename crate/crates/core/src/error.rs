use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A density does not carry unit mass on its grid, usually because the
    /// grid is too narrow for the Gaussian it samples.
    #[error("mass deficit: captured mass {captured:.9} differs from 1 by more than {tol:e}")]
    MassDeficit { captured: f64, tol: f64 },

    #[error(
        "absolute continuity violated at grid index {index}: density is positive where the reference weight is zero"
    )]
    AbsoluteContinuity { index: usize },

    #[error("unsupported case: {0}")]
    Unsupported(String),

    #[error("kernel truncated: row {row} captures mass {captured:.9}")]
    KernelTruncation { row: usize, captured: f64 },

    #[error("grids differ between inputs")]
    GridMismatch,

    #[error("Schrödinger system did not converge in {iterations} iterations (marginal error {marginal_error:e})")]
    NonConvergence { iterations: usize, marginal_error: f64 },

    #[error("marginal density vanishes at grid index {index}")]
    ZeroMarginal { index: usize },

    #[error("solution did not converge; refusing to evaluate")]
    NotConverged,

    #[error("interpolation mass drift {drift:e} exceeds {limit:e}")]
    MassDrift { drift: f64, limit: f64 },

    #[error(
        "ill-conditioned path: {fraction:.3} of the grid has density below the clipping threshold inside the support"
    )]
    IllConditionedPath { fraction: f64 },

    #[error("b = {b} outside the admissible domain (0, {b_max})")]
    ScheduleDomain { b: f64, b_max: f64 },

    #[error("model mismatch: {0}")]
    ModelMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
