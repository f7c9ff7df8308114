//! Command implementations behind the `bridgekit` binary.
//!
//! Every command writes its CSV files before any SVG, and reports failures
//! through [`CliError::exit_code`]: 0 pass, 1 failed check, 2 bad input,
//! 3 solver non-convergence.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bridge;
pub mod config;
pub mod error;
pub mod limits;
pub mod output;
pub mod verify;

pub use config::{KernelChoice, ProblemConfig};
pub use error::{CliError, CliResult};
