//! `ruelle`: pressure, eigendata, equilibrium measures and entropy for
//! transfer operators configured from a TOML file.
//!
//! Exit codes: 0 success, 1 verify found a failing check, 2 configuration
//! error, 3 resource cap exceeded, 4 numeric failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Context, Format};
use config::{Loaded, Overrides};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] ruelle::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_resource() => 3,
            CliError::Core(_) => 4,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "ruelle",
    version,
    about = "Transfer-operator numerics on symbolic spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the machine-readable output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "report")]
    format: Format,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Kernel depth d.
    #[arg(long, global = true)]
    depth: Option<usize>,
    /// Spectral tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Pressure bracket and Gelfand radius sequence.
    Pressure,
    /// Leading eigenvalue, eigenfunction and eigenmeasure.
    Spectral,
    /// Equilibrium measure μ = h·ν and its invariance residual.
    Equilibrium,
    /// Relative entropy, specific entropy and variational gap.
    Entropy,
    /// Pressure curve over an inverse-temperature grid.
    Scan,
    /// Every invariant check against the configured instance.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Pressure => "pressure",
            Command::Spectral => "spectral",
            Command::Equilibrium => "equilibrium",
            Command::Entropy => "entropy",
            Command::Scan => "scan",
            Command::Verify => "verify",
        }
    }
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    let c = &cli.common;
    let mut loaded = Loaded::read(c.config.as_deref())?;
    loaded.apply(&Overrides {
        seed: c.seed,
        depth: c.depth,
        tol: c.tol,
        threads: c.threads,
    });
    loaded.validate()?;
    if let Some(cap) = loaded.config.run.cylinder_cap {
        ruelle::space::set_cylinder_cap(cap);
    }
    if let Some(n) = loaded.config.run.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("threads: {e}")))?;
    }
    let ctx = Context::new(cli.command.name(), &loaded, c.format)?;
    let outcome = match cli.command {
        Command::Pressure => commands::pressure(&ctx),
        Command::Spectral => commands::spectral(&ctx),
        Command::Equilibrium => commands::equilibrium(&ctx),
        Command::Entropy => commands::entropy(&ctx),
        Command::Scan => commands::scan(&ctx),
        Command::Verify => commands::verify(&ctx),
    }?;
    match &c.out {
        Some(path) => std::fs::write(path, &outcome.document)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        None => print!("{}", outcome.document),
    }
    for line in &outcome.summary {
        eprintln!("{line}");
    }
    Ok(outcome.exit)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
