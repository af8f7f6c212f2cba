//! `pipeshape`: command-line driver for pipe-flow shape optimization.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pipeshape::Mode;

use config::{Overrides, RunConfig};
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "pipeshape", version, about = "Shape optimization of steady pipe flow")]
struct Cli {
    /// TOML run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<Mode>,
    /// Nominal mesh size.
    #[arg(long, global = true)]
    h: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the state problem and report the dissipated energy.
    Solve {
        /// Use the straight pipe regardless of the family amplitude.
        #[arg(long)]
        cylinder: bool,
    },
    /// Solve the adjoint problem.
    Adjoint,
    /// Compare the adjoint shape derivative with finite differences.
    Gradcheck,
    /// Run the augmented-Lagrangian descent.
    Optimize,
    /// Evaluate J over the spline family.
    Sweep,
    /// Run the non-optimality checks on the straight pipe.
    Verify,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: pipeshape::Error| e.to_string())
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let overrides = Overrides { mode: cli.mode, h: cli.h, out: cli.out.clone() };
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    match cli.command {
        Command::Solve { cylinder } => commands::solve(&cfg, cylinder),
        Command::Adjoint => commands::adjoint(&cfg),
        Command::Gradcheck => commands::gradcheck(&cfg),
        Command::Optimize => commands::optimize(&cfg),
        Command::Sweep => commands::sweep(&cfg),
        Command::Verify => commands::verify(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            println!("{}", report.trim_end());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
