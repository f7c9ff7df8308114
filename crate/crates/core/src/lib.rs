//! Schrödinger bridges and entropic optimal transport on one-dimensional
//! grids, for heat and Ornstein-Uhlenbeck reference dynamics.
//!
//! | module | contents |
//! |--------|----------|
//! | [`measures`] | grids, densities, relative entropy, Gaussian `W₂` |
//! | [`semigroup`] | transition kernels, `T_t`, entropic Hopf-Lax `Q^ε_u` |
//! | [`sinkhorn`] | log-domain IPFP for the Schrödinger system |
//! | [`gaussian_bridge`] | closed-form bridges between unit Gaussians |
//! | [`dynamics`] | drifts, current/osmotic velocities, actions, residuals |
//! | [`dual`] | Kantorovich-type dual functional and gaps |
//! | [`contraction`] | schedules, commutation and contraction checks |

// `!(a < b)` is used on purpose to reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contraction;
pub mod dual;
pub mod dynamics;
pub mod error;
pub mod gaussian_bridge;
pub mod measures;
pub mod numdiff;
pub mod semigroup;
pub mod sinkhorn;

pub use error::{Error, Result};
pub use measures::{GaussianMeasure, Grid, GridDensity, GridFunction, ReferenceKind, ReferenceMeasure};
pub use semigroup::{KernelMatrix, KolmogorovModel, Potential};
pub use sinkhorn::{SchroedingerSolution, SolverOptions};
