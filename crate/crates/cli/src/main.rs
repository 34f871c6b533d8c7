//! `qcr`: generate planted instances, solve, certify and sweep.
//!
//! Exit codes: 0 ok, 1 certificate conditions fail, 2 invalid input or
//! options, 3 file system failure, 4 solver did not converge, 5 Neumann
//! series diverged, 130 interrupted grid run.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

use config::Config;
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "qcr", version, about = "Planted quasi-clique recovery")]
struct Cli {
    /// Worker thread cap; falls back to QCR_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// More logging; repeat for debug output.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    /// Only log errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    /// Flat `key = value` file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a planted instance.
    Gen(GenArgs),
    /// Decompose an adjacency matrix.
    Solve(SolveArgs),
    /// Build and check the dual certificate for an instance.
    Certify(CertifyArgs),
    /// Run a recovery grid and write CSV, PGM and JSON.
    Grid(GridArgs),
    /// Print all six norms of a matrix.
    Norms(NormsArgs),
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub nc: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// `plain` or `quasi_clique`.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu0: Option<f64>,
    #[arg(long)]
    pub mu_growth: Option<f64>,
    /// Primal residual tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub tol_dual: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Density parameter of the constraint; defaults to the instance's.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Block size of the constraint; defaults to the instance's `n_c`.
    #[arg(long)]
    pub eta: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Number of golfing batches.
    #[arg(long)]
    pub k0: Option<usize>,
    /// Seed of the batch partition; defaults to the instance seed.
    #[arg(long)]
    pub golf_seed: Option<u64>,
    /// Constant in the sampling-regime diagnostic.
    #[arg(long)]
    pub c0: Option<f64>,
    /// Include `Q_B` and `Q_C` in the report.
    #[arg(long)]
    pub with_matrices: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GridArgs {
    /// `size` or `phase`.
    #[arg(long)]
    pub kind: Option<String>,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub nc: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub base_seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct NormsArgs {
    #[arg(long)]
    pub input: Option<PathBuf>,
}

fn init_logging(verbose: u8, quiet: bool) {
    let level = match (quiet, verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        (false, _) => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .parse_default_env()
        .init();
}

fn thread_cap(flag: Option<usize>, cfg: &Config) -> Result<Option<usize>, CliError> {
    if let Some(t) = cfg.or(flag, "threads")? {
        return Ok(Some(t));
    }
    match std::env::var("QCR_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("QCR_THREADS = `{v}` is not a thread count"))),
        _ => Ok(None),
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let threads = thread_cap(cli.threads, &cfg)?;
    if threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    match cli.command {
        Command::Gen(a) => commands::gen(a, &cfg),
        Command::Solve(a) => commands::solve(a, &cfg),
        Command::Certify(a) => commands::certify(a, &cfg),
        Command::Grid(a) => commands::grid(a, &cfg, threads),
        Command::Norms(a) => commands::norms(a, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose, cli.quiet);
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
