mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kdv_vessel::suite::Level;

use crate::config::Format;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "kdv-vessel",
    version,
    about = "Build KdV vessels, dump fields and run residual checks"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Seed for sampled spectral parameters and probe points.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for grid sweeps.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_parser = parse_level)]
    pub level: Option<Level>,
}

fn parse_level(s: &str) -> Result<Level, String> {
    s.parse::<Level>().map_err(|e| e.to_string())
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Soliton field dump with columns x,t,tau,beta,q.
    Soliton(SolitonArgs),
    /// Discrete or quadrature vessel field dump with columns x,t,tau,beta,q.
    Spectral,
    /// Integrate the squared-amplitude system; rows t,k,p.
    Evolve,
    /// Transfer function samples and their symmetry residual.
    Transfer,
    /// Gelfand–Levitan kernels and residuals.
    Scatter,
    /// Run the checks listed in the config or on the command line.
    Verify(VerifyArgs),
    /// Run every acceptance check.
    Suite,
}

#[derive(Debug, Clone, Args)]
pub struct SolitonArgs {
    /// Wavenumbers, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub k: Option<Vec<f64>>,
    /// Amplitude moduli |b|, comma separated.
    #[arg(long = "b-abs", value_delimiter = ',', allow_hyphen_values = true)]
    pub b_abs: Option<Vec<f64>>,
    /// XMIN,XMAX,NX,TMIN,TMAX,NT
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Check names; may be repeated.
    #[arg(long = "check")]
    pub checks: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(CliError::ClosedPipe) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    if let Some(n) = cli.common.threads {
        if n == 0 {
            return Err(CliError::Config("--threads: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let ctx = commands::Context::new(&cli.common)?;
    match cli.command {
        Command::Soliton(args) => commands::soliton(&ctx, &args),
        Command::Spectral => commands::spectral(&ctx),
        Command::Evolve => commands::evolve(&ctx),
        Command::Transfer => commands::transfer(&ctx),
        Command::Scatter => commands::scatter(&ctx),
        Command::Verify(args) => commands::verify(&ctx, &args),
        Command::Suite => commands::suite(&ctx),
    }
}
