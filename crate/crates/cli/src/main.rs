mod cloud;
mod commands;
mod json;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "ergorate", version, about = "Wasserstein convergence rates of subordinated Markov processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the predicted decay rate of a model as JSON.
    Rate(RateArgs),
    /// Run a replicated Monte Carlo experiment and write its report.
    Experiment(ExperimentArgs),
    /// Wasserstein distance between two CSV point clouds.
    Wasserstein(WassersteinArgs),
    /// Compare the Laplace transform of a stable subordinator with its closed form.
    CheckSubordinator(CheckSubordinatorArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum RateModel {
    WrightFisher,
    Interval,
    Compact,
    Euclidean,
    Hamiltonian,
    HamiltonianExample,
    Spherical,
    StableLike,
    StableLikeWhole,
    General,
    Kappa,
}

#[derive(Args)]
pub struct RateArgs {
    #[arg(long, value_enum)]
    pub model: RateModel,
    /// Dirichlet parameters `q_0,...,q_N`.
    #[arg(long, value_delimiter = ',')]
    pub q: Vec<f64>,
    /// Index of the subordinator class.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Order of the Wasserstein distance.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long)]
    pub l: Option<f64>,
    #[arg(long)]
    pub n: Option<u32>,
    #[arg(long)]
    pub m: Option<u32>,
    #[arg(long)]
    pub n_prime: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub alpha_prime: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub hessian_bounded: bool,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub d: Option<f64>,
    /// A positive number or `inf`.
    #[arg(long)]
    pub d_prime: Option<String>,
    #[arg(long)]
    pub k: Option<f64>,
}

#[derive(Args)]
pub struct ExperimentArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Directory receiving report.json, table.csv and run.log.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, env = "ERGORATE_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum Method {
    Exact,
    Sliced,
}

#[derive(Args)]
pub struct WassersteinArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, value_enum, default_value_t = Method::Exact)]
    pub method: Method,
    /// Random directions for the sliced distance.
    #[arg(long, default_value_t = 64)]
    pub projections: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest cloud handled by the exact solver.
    #[arg(long, default_value_t = ergorate::transport::DEFAULT_SIZE_CAP)]
    pub size_cap: usize,
}

#[derive(Args)]
pub struct CheckSubordinatorArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Rate(args) => commands::rate(&args),
        Command::Experiment(args) => commands::experiment(&args),
        Command::Wasserstein(args) => commands::wasserstein(&args),
        Command::CheckSubordinator(args) => commands::check_subordinator(&args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
