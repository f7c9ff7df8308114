use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{source_name}:{line}: {message}")]
    Config { source_name: String, line: usize, message: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] bridgekit_core::Error),
    #[error("solver did not converge at ε = {epsilon}")]
    SweepNonConvergence { epsilon: f64 },
    #[error("check failed: {0}")]
    Assertion(String),
}

impl CliError {
    /// 1 for failed checks, 3 for solver non-convergence, 2 for everything
    /// the caller has to fix in the input.
    pub fn exit_code(&self) -> u8 {
        use bridgekit_core::Error as E;
        match self {
            Self::Assertion(_) => 1,
            Self::Core(E::NonConvergence { .. } | E::NotConverged) | Self::SweepNonConvergence { .. } => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
