//! Command-line front end: `simulate`, `bounds`, `certify` and `plot`.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod plot;

use config::{KappaOverride, Overrides};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("certification failed: {0}")]
    Certification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Certification(_) => 3,
        }
    }
}

impl From<depbandits::Error> for CliError {
    fn from(e: depbandits::Error) -> Self {
        use depbandits::Error as E;
        match e {
            E::Config(_) | E::Domain { .. } | E::Type(_) => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "depbandits", version, about = "Bandits with cluster-dependent arms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the Monte Carlo regret experiment.
    Simulate(SimulateArgs),
    /// Evaluate the lower and upper regret-bound coefficients.
    Bounds(BoundsArgs),
    /// Certify the structural constants of the instance.
    Certify(CertifyArgs),
    /// Render an aggregate CSV as SVG.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; defaults to the config's `output_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub horizon: Option<u64>,
    #[arg(long)]
    pub reps: Option<u64>,
    /// A positive number, `floor` or `surrogate`.
    #[arg(long)]
    pub kappa: Option<KappaOverride>,
    /// Write a per-round audit log.
    #[arg(long)]
    pub audit: bool,
    #[arg(long, env = "DEPBANDITS_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub kappa: Option<KappaOverride>,
    /// Use grid sweeps even where closed forms exist.
    #[arg(long)]
    pub grid_only: bool,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Aggregate CSV written by `simulate`.
    pub input: PathBuf,
    /// SVG file to write.
    pub output: PathBuf,
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(a) => {
            let req = commands::SimulateRequest {
                config: &a.config,
                out: a.out.as_deref(),
                kappa: a.kappa.as_ref(),
                overrides: Overrides {
                    seed: a.seed,
                    horizon: a.horizon,
                    reps: a.reps,
                    audit: a.audit,
                    threads: a.threads,
                },
            };
            let dir = commands::simulate(&req)?;
            println!("wrote {}", dir.display());
        }
        Command::Bounds(a) => {
            let dir = commands::bounds(&a.config, a.out.as_deref(), a.kappa.as_ref(), !a.grid_only)?;
            println!("wrote {}", dir.join(commands::BOUNDS_FILE).display());
        }
        Command::Certify(a) => {
            let dir = commands::certify(&a.config, a.out.as_deref())?;
            println!("wrote {}", dir.join(commands::CONSTANTS_FILE).display());
        }
        Command::Plot(a) => {
            commands::plot(&a.input, &a.output)?;
            println!("wrote {}", a.output.display());
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => CliError::Usage(String::new()).exit_code(),
            };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
