//! Command-line front end: `ode`, `simulate`, `clt`, `stationary` and
//! `selfcheck`, each driven by one JSON config file.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::ExperimentConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "moran", version, about = "Moran model experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Ode,
    Simulate,
    Clt,
    Stationary,
    Selfcheck,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form deterministic limit against an RK4 oracle.
    Ode(CommonArgs),
    /// Ensemble of exact stochastic paths (law of large numbers).
    Simulate(CommonArgs),
    /// Fluctuations around the limit against the Gaussian law.
    Clt(CommonArgs),
    /// Exact stationary distribution and its Gaussian limit.
    Stationary(CommonArgs),
    /// Built-in numerical checks; exit code 3 on any violation.
    Selfcheck(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON config file; the built-in reference experiment if omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "moran-out")]
    pub out: PathBuf,
    /// Caps the number of worker threads.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Command {
    pub fn parts(&self) -> (CommandKind, &CommonArgs) {
        match self {
            Command::Ode(a) => (CommandKind::Ode, a),
            Command::Simulate(a) => (CommandKind::Simulate, a),
            Command::Clt(a) => (CommandKind::Clt, a),
            Command::Stationary(a) => (CommandKind::Stationary, a),
            Command::Selfcheck(a) => (CommandKind::Selfcheck, a),
        }
    }
}

pub fn resolve_config(args: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::reference(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Runs one subcommand; returns the path of the JSON report.
pub fn run(kind: CommandKind, args: &CommonArgs) -> Result<PathBuf, CliError> {
    let cfg = resolve_config(args)?;
    let exec = || match kind {
        CommandKind::Ode => commands::cmd_ode(&cfg, &args.out),
        CommandKind::Simulate => commands::cmd_simulate(&cfg, &args.out),
        CommandKind::Clt => commands::cmd_clt(&cfg, &args.out),
        CommandKind::Stationary => commands::cmd_stationary(&cfg, &args.out),
        CommandKind::Selfcheck => commands::cmd_selfcheck(&cfg, &args.out),
    };
    match args.threads {
        Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))?
            .install(exec),
        None => exec(),
    }
}
