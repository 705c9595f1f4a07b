//! `cdr`: command-line driver for discrete Čech-de Rham Hodge-Laplace problems.
//!
//! Every subcommand reads one TOML run configuration and writes CSV/JSON
//! files stamped with the crate version and the SHA-256 of the config.

pub mod commands;
pub mod config;
pub mod error;
pub mod expr;
pub mod output;
pub mod setup;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;
use crate::output::Output;

#[derive(Parser, Debug)]
#[command(name = "cdr", version, about = "Discrete Čech-de Rham Hodge-Laplace solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the Hodge-Laplace problem at [problem].degree.
    Solve(CommonArgs),
    /// Print dim H^k for every degree of the cover's complex.
    Cohomology(CommonArgs),
    /// Split the [source] cochain into exact, harmonic and coexact parts.
    Decompose(CommonArgs),
    /// Poincaré constants, optionally swept over a model parameter.
    Poincare(CommonArgs),
    /// Heat (order 1) or wave (order 2) evolution.
    Transient(CommonArgs),
    /// Mesh-refinement study against a known solution.
    Convergence(CommonArgs),
}

#[derive(Args, Debug)]
pub struct CommonArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides [output].directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Self::Solve(a)
            | Self::Cohomology(a)
            | Self::Decompose(a)
            | Self::Poincare(a)
            | Self::Transient(a)
            | Self::Convergence(a) => a,
        }
    }
}

pub fn execute(command: &Command) -> Result<(), CliError> {
    let args = command.args();
    let cfg = config::load(&args.config)?;
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.config.output.directory.clone())
        .ok_or_else(|| cfg.error("output", "no output directory: pass --out or set [output].directory"))?;
    let out = Output::create(&dir, &cfg.text)?;
    match command {
        Command::Solve(_) => commands::solve(&cfg, &out),
        Command::Cohomology(_) => commands::cohomology(&cfg, &out),
        Command::Decompose(_) => commands::decompose(&cfg, &out),
        Command::Poincare(_) => commands::poincare(&cfg, &out),
        Command::Transient(_) => commands::transient(&cfg, &out),
        Command::Convergence(_) => commands::convergence(&cfg, &out),
    }
}

/// Parses `args` and runs the command. Returns the process exit code:
/// 0 on success, 1 for usage or configuration errors, 2 for solver failures.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    cdr_core::linalg::use_sequential_kernels();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
