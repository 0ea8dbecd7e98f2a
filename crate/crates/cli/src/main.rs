//! `dmera`: evaluate, optimize and analyse DMERA and QAOA circuits for the
//! critical Ising chain, writing plot-ready CSV.

mod commands;
mod config;
mod figures;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dmera_core::Model;

use config::{Grid, RunConfig};

/// Thread cap for the parallel evaluation grids.
pub const THREADS_ENV: &str = "DMERA_THREADS";

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or inputs; exit code 2.
    Usage(String),
    /// The computation itself failed; exit code 1.
    Domain(dmera_core::Error),
    /// Something went wrong after the computation, or the result is not
    /// trustworthy; exit code 1.
    Failed(String),
}

impl From<dmera_core::Error> for CliError {
    fn from(e: dmera_core::Error) -> Self {
        CliError::Domain(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failed(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "dmera", version, about = "DMERA and QAOA benchmarks for the critical Ising chain")]
pub struct Cli {
    /// JSON file supplying defaults for any flag (keys use snake_case).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fixed-point energy error and finite-size infidelity of a parameter set.
    Evaluate(EvaluateArgs),
    /// Optimize the fixed-point energy at one depth.
    Optimize(OptimizeArgs),
    /// Translation- and half-shift-averaged Majorana correlators.
    Correlate(CorrelateArgs),
    /// Mean entanglement entropy of contiguous windows.
    Entropy(ProfileArgs),
    /// Mean normalized infidelity of contiguous windows.
    Subfid(ProfileArgs),
    /// Optimized alternating-operator circuits.
    Qaoa(QaoaArgs),
    /// Regenerate one benchmark dataset with its standard grid.
    ReproduceFigure(FigureArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    #[arg(long)]
    pub model: Option<Model>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Depths, e.g. `6`, `2,4,6` or `1..6`.
    #[arg(long)]
    pub depth: Option<Grid>,
    /// Ring sizes (powers of two).
    #[arg(long)]
    pub sites: Option<Grid>,
    /// Ring of `2^layers` sites; ignored when --sites is given.
    #[arg(long)]
    pub layers: Option<usize>,
    /// Parameter file (`{"model", "D", "theta"}`) replacing the bundled set.
    #[arg(long)]
    pub params: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    Random,
    Bootstrap,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub depth: Option<usize>,
    /// Defaults to `bootstrap` for depth 3 and above, `random` otherwise.
    #[arg(long, value_enum)]
    pub init: Option<InitKind>,
    /// Bundled depth to bootstrap from (depth - 1 or depth - 2).
    #[arg(long)]
    pub from_depth: Option<usize>,
    /// Parameter file to bootstrap from instead of the bundled set.
    #[arg(long)]
    pub from: Option<PathBuf>,
    /// Row before which two new rows are inserted when growing by two.
    #[arg(long)]
    pub position: Option<usize>,
    /// Random starts (random init) or perturbed restarts per run.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// JSON-lines run log.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub depth: Option<Grid>,
    #[arg(long)]
    pub sites: Option<Grid>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub max_distance: Option<usize>,
    /// Also write the averaging-gain summary here.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub depth: Option<Grid>,
    #[arg(long)]
    pub sites: Option<Grid>,
    #[arg(long)]
    pub layers: Option<usize>,
    /// Average over every `stride`-th window start.
    #[arg(long)]
    pub stride: Option<usize>,
}

#[derive(Args, Debug)]
pub struct QaoaArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub rounds: Option<Grid>,
    #[arg(long)]
    pub sites: Option<Grid>,
    #[arg(long)]
    pub restarts: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    #[value(name = "1b")]
    F1b,
    #[value(name = "2a")]
    F2a,
    #[value(name = "2b")]
    F2b,
    #[value(name = "3")]
    F3,
    #[value(name = "4a")]
    F4a,
    #[value(name = "4b")]
    F4b,
    #[value(name = "5")]
    F5,
    #[value(name = "6a")]
    F6a,
    #[value(name = "6b")]
    F6b,
}

#[derive(Args, Debug)]
pub struct FigureArgs {
    #[arg(value_enum)]
    pub figure: Figure,
    #[command(flatten)]
    pub common: Common,
    /// Override the figure's depth grid.
    #[arg(long)]
    pub depth: Option<Grid>,
    /// Override the figure's round grid.
    #[arg(long)]
    pub rounds: Option<Grid>,
    /// Also write a log-scale SVG next to the CSV (requires --out).
    #[arg(long)]
    pub svg: bool,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Failed(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Evaluate(a) => commands::evaluate(a, &cfg),
        Command::Optimize(a) => commands::optimize(a, &cfg),
        Command::Correlate(a) => commands::correlate(a, &cfg),
        Command::Entropy(a) => commands::entropy(a, &cfg),
        Command::Subfid(a) => commands::subfid(a, &cfg),
        Command::Qaoa(a) => commands::qaoa(a, &cfg),
        Command::ReproduceFigure(a) => figures::reproduce(a, &cfg),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors by itself
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Domain(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(CliError::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
