//! Command-line front end: configuration, orchestration and persistence.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{execute, replay, resolve_out_dir};
use crate::config::{parse_override, ExperimentConfig};
pub use crate::error::CliError;
use crate::manifest::CommandKind;

#[derive(Debug, Parser)]
#[command(name = "skdv", version, about = "Stochastic KdV Galerkin simulator and estimators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate `estimator.n_traj` trajectories and store them.
    Simulate(CommonArgs),
    /// Moment estimates over the m-sweep.
    Moments(CommonArgs),
    /// Increment scaling at stopping times.
    Aldous(CommonArgs),
    /// Spot-check the declared constants of the noise coefficients.
    ValidateModel(CommonArgs),
    /// Re-run from a manifest (given as --config) and compare every output.
    Replay(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Override a configuration key, e.g. `--set solver.dt=1e-3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Worker threads (default: all cores).
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

impl Command {
    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Simulate(a)
            | Command::Moments(a)
            | Command::Aldous(a)
            | Command::ValidateModel(a)
            | Command::Replay(a) => a,
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let args = cli.command.args();
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Config {
                key: "--threads".into(),
                message: "must be at least 1".into(),
            });
        }
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let kind = match cli.command {
        Command::Simulate(_) => CommandKind::Simulate,
        Command::Moments(_) => CommandKind::Moments,
        Command::Aldous(_) => CommandKind::Aldous,
        Command::ValidateModel(_) => CommandKind::ValidateModel,
        Command::Replay(_) => {
            if !args.set.is_empty() {
                return Err(CliError::Config {
                    key: "--set".into(),
                    message: "replay takes its configuration from the manifest".into(),
                });
            }
            let n = replay(&args.config, args.out.as_deref())?;
            println!("replay: {n} files identical");
            return Ok(());
        }
    };
    let overrides = args
        .set
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>, _>>()?;
    let config = ExperimentConfig::load(&args.config, &overrides)?;
    let out = resolve_out_dir(args.out.as_deref(), &config);
    let manifest = execute(kind, &config, &out)?;
    println!("wrote {} files and manifest to {}", manifest.files.len(), out.display());
    Ok(())
}
