use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bridgekit::bridge::cmd_bridge;
use bridgekit::limits::{cmd_limits, DEFAULT_EPSILONS};
use bridgekit::verify::{cmd_verify, Suite};
use bridgekit::{CliResult, ProblemConfig};
use clap::{Args, Parser, Subcommand};

/// Schrödinger bridges between Gaussians on a 1-D grid.
#[derive(Parser)]
#[command(name = "bridgekit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Problem file with `key = value` lines.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Moment curves, densities and figure of the three interpolations.
    Bridge(Common),
    /// Run a verification suite and write report.csv.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "all")]
        suite: Suite,
    },
    /// Sweep ε and compare the scaled cost with W2²/2.
    Limits {
        #[command(flatten)]
        common: Common,
        /// Comma-separated, strictly decreasing.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_EPSILONS)]
        eps: Vec<f64>,
    },
}

fn load(path: &Path) -> CliResult<ProblemConfig> {
    ProblemConfig::from_path(path)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Bridge(c) => {
            let files = cmd_bridge(&load(&c.config)?, &c.out)?;
            println!("wrote {}", files.moments.display());
        }
        Command::Verify { common, suite } => {
            let rows = cmd_verify(&load(&common.config)?, suite, &common.out)?;
            println!("{} checks passed", rows.len());
        }
        Command::Limits { common, eps } => {
            let outcome = cmd_limits(&load(&common.config)?, &eps, &common.out)?;
            for r in &outcome.rows {
                println!("ε = {}: scaled cost {}", r.epsilon, r.scaled_cost.unwrap_or(f64::NAN));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bridgekit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
