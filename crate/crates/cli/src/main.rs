//! `qkd`: runs simulations, boundary scans, key distillation sessions and
//! stage reports from a `key = value` config file.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cvqkd::config::{load_config, RunConfig};

#[derive(Parser)]
#[command(name = "qkd", version, about = "Continuous-variable QKD simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-point scatter of sifted data with post-selection classes.
    Simulate(Common),
    /// Post-selection boundary curves for both attacks.
    Boundary(Common),
    /// Full two-party session: keys, stage table, transcript.
    Distill(Common),
    /// Stage table for both attacks, as text and CSV.
    Report(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Process exit statuses.
pub mod exit {
    pub const FAILURE: u8 = 1;
    pub const CONFIG: u8 = 2;
    pub const INFEASIBLE: u8 = 3;
    pub const ABORTED: u8 = 4;
}

/// How a command finished.
pub enum Status {
    Ok,
    Infeasible(String),
    Aborted(String),
}

fn load(common: &Common) -> Result<RunConfig, cvqkd::Error> {
    let mut cfg = load_config(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (common, run): (&Common, fn(&RunConfig) -> cvqkd::Result<Status>) = match &cli.command {
        Command::Simulate(c) => (c, commands::simulate),
        Command::Boundary(c) => (c, commands::boundary),
        Command::Distill(c) => (c, commands::distill),
        Command::Report(c) => (c, commands::report),
    };
    let cfg = match load(common) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("qkd: {}: {e}", common.config.display());
            return ExitCode::from(exit::CONFIG);
        }
    };
    match run(&cfg) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Infeasible(why)) => {
            eprintln!("qkd: infeasible: {why}");
            ExitCode::from(exit::INFEASIBLE)
        }
        Ok(Status::Aborted(why)) => {
            eprintln!("qkd: session aborted: {why}");
            ExitCode::from(exit::ABORTED)
        }
        Err(e @ (cvqkd::Error::Config { .. } | cvqkd::Error::Domain { .. })) => {
            eprintln!("qkd: {e}");
            ExitCode::from(exit::CONFIG)
        }
        Err(e) => {
            eprintln!("qkd: {e}");
            ExitCode::from(exit::FAILURE)
        }
    }
}
