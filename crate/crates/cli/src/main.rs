//! Command-line entry points: `fit`, `simulate` and `summarize`.

mod commands;
mod summaries;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "arealclust",
    version,
    about = "Bayesian spatial clustering of multivariate areal data"
)]
struct Cli {
    /// Worker threads for chain/replicate execution (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the clustering model to an outcome file on a map.
    Fit(FitArgs),
    /// Generate synthetic replicates (optionally fitting each one).
    Simulate(SimulateArgs),
    /// Regenerate summary tables from stored draws without re-sampling.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
pub struct FitArgs {
    /// Outcome file: area_id,<outcome_1>,... with empty fields = missing.
    #[arg(long)]
    y: Option<PathBuf>,
    /// Undirected edge list with header area_a,area_b.
    #[arg(long)]
    adj: Option<PathBuf>,
    /// Covariate file with the same shape as the outcome file.
    #[arg(long)]
    x: Option<PathBuf>,
    /// Area registry (one id per line); defaults to the outcome row order.
    #[arg(long)]
    areas: Option<PathBuf>,
    /// Flat key-value configuration file (a manifest also works).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: ConfigOverrides,
}

#[derive(Args)]
pub struct ConfigOverrides {
    /// Number of clusters.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Burn-in fraction in [0,1).
    #[arg(long)]
    burn_in: Option<f64>,
    #[arg(long)]
    thinning: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Shrinkage variant: none|d|c|cd|c_d|d_cd.
    #[arg(long)]
    shrinkage: Option<String>,
    /// Prior on the spatial parameter: fixed|spike_slab.
    #[arg(long)]
    rho_mode: Option<String>,
    #[arg(long)]
    rho_fixed: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// HPD interval level for the summary tables.
    #[arg(long)]
    level: Option<f64>,
    /// Center and scale covariates before fitting.
    #[arg(long)]
    standardize_x: bool,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Scenario name: sim1, sim2 or custom.
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value_t = 5)]
    replicates: usize,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Edge list of the map; defaults to the built-in 259-area lattice.
    #[arg(long)]
    adj: Option<PathBuf>,
    /// Area registry matching --adj.
    #[arg(long)]
    areas: Option<PathBuf>,
    /// Latitude file (area_id,latitude) for the generator's ordering;
    /// registry order is used when absent.
    #[arg(long)]
    lat: Option<PathBuf>,
    /// Number of outcomes (sim1 and custom; sim1 default 10).
    #[arg(long)]
    d: Option<usize>,
    /// True number of clusters (custom scenario only).
    #[arg(long)]
    k_true: Option<usize>,
    /// Spatial correlations per stick, comma separated (custom scenario).
    #[arg(long)]
    rho: Option<String>,
    /// Fit each replicate and emit the metrics table.
    #[arg(long)]
    fit: bool,
    /// Number of clusters used when fitting (default: the scenario truth).
    #[arg(long, name = "K")]
    fit_k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Shrinkage variant used when fitting.
    #[arg(long)]
    shrinkage: Option<String>,
    /// Prior on the spatial parameter used when fitting.
    #[arg(long)]
    rho_mode: Option<String>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
}

#[derive(Args)]
pub struct SummarizeArgs {
    /// Directory holding the draw files of a previous fit.
    #[arg(long)]
    draws: PathBuf,
    /// Output directory for the regenerated tables.
    #[arg(long)]
    out: PathBuf,
    /// HPD interval level.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Repair label switching before summarizing: on|off.
    #[arg(long, default_value = "on")]
    relabel: String,
}

/// Validation failures exit 1; runtime aborts exit 2.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl From<arealclust::sampler::SamplerError> for CliError {
    fn from(e: arealclust::sampler::SamplerError) -> Self {
        use arealclust::sampler::SamplerError::*;
        match e {
            NonFiniteLogLik { .. } | BrokenCovariance { .. } => CliError::Runtime(e.to_string()),
            Config(_) => CliError::Validation(e.to_string()),
        }
    }
}

macro_rules! validation_from {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Validation(e.to_string())
            }
        }
    )*};
}

validation_from!(
    arealclust::graph::GraphError,
    arealclust::ingest::IngestError,
    arealclust::io::IoError,
    arealclust::post::PostError,
    std::io::Error
);

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let threads = rayon::current_num_threads();
    let result = match cli.command {
        Command::Fit(args) => commands::fit(args, threads),
        Command::Simulate(args) => commands::simulate(args, threads),
        Command::Summarize(args) => commands::summarize(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("runtime error: {msg}");
            ExitCode::from(2)
        }
    }
}
