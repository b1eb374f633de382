//! `sonine`: verification, solves and convergence studies from a config file.
//!
//! Exit codes: 0 success, 2 configuration error, 3 verification failure,
//! 4 numerical failure. Stdout carries one JSON summary line.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sonine_core::expr::ExprError;
use sonine_core::Error as CoreError;
use thiserror::Error;

use commands::Summary;
use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("verification failed: {detail}")]
    Verification { summary: Box<Summary>, detail: String },

    #[error("numerical failure: {0}")]
    Numerical(#[source] CoreError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Verification { .. } => 3,
            CliError::Numerical(_) => 4,
        }
    }

    fn status(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config_error",
            CliError::Verification { .. } => "fail",
            CliError::Numerical(_) => "numerical_failure",
        }
    }
}

/// Inputs rejected before any numerics count as configuration errors.
pub fn classify(e: CoreError) -> CliError {
    match e {
        CoreError::Expr(ExprError::Domain(_)) => CliError::Numerical(e),
        CoreError::Expr(_) | CoreError::Validation(_) | CoreError::Unsupported(_) => CliError::Config(e.to_string()),
        other => CliError::Numerical(other),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    /// Weighted first-kind VIE with kernel w(s,t) k(t-s).
    Vie1,
    /// First-kind VIE with the associate kernel K.
    Vie1k,
    /// Nonlocal differential equation with constant c.
    Ode,
    /// Variable-exponent subdiffusion in one space dimension.
    Pde,
}

#[derive(Debug, Parser)]
#[command(name = "sonine", version, about = "Weighted Sonine kernels and Volterra solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the Sonine conditions and the LICM screen for the configured kernel.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one problem and write solution and residual tables.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve at N, 2N, 4N, ... and tabulate errors and observed orders.
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(0..=12))]
        doublings: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Verify { .. } => "verify",
            Command::Solve { .. } => "solve",
            Command::Converge { .. } => "converge",
        }
    }
}

fn run(command: &Command) -> Result<Summary, CliError> {
    let (path, out) = match command {
        Command::Verify { config, out } | Command::Solve { config, out, .. } | Command::Converge { config, out, .. } => {
            (config, out)
        }
    };
    let config = RunConfig::load(path)?;
    let dir = out.clone().unwrap_or_else(|| config.output.dir.clone());
    match *command {
        Command::Verify { .. } => commands::verify(&config, &dir),
        Command::Solve { kind, .. } => commands::solve(&config, kind, &dir),
        Command::Converge { kind, doublings, .. } => commands::converge(&config, kind, doublings as usize, &dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (summary, code) = match run(&cli.command) {
        Ok(summary) => (summary, 0),
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            let summary = match e {
                CliError::Verification { summary, .. } => *summary,
                other => Summary::new(cli.command.name(), other.status()),
            };
            (summary, code)
        }
    };
    println!("{}", serde_json::to_string(&summary).expect("summary serialises"));
    ExitCode::from(code)
}
