use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "sephill", version, about = "Separating Hill estimation for elliptical data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic elliptical sample.
    Simulate(SimulateArgs),
    /// Estimate the extreme value index of a CSV sample.
    Estimate(EstimateArgs),
    /// Hill estimates over a range of k.
    Hillplot(HillplotArgs),
    /// Randomised checks of the order-statistic perturbation bounds.
    VerifyBounds(VerifyBoundsArgs),
    /// Monte Carlo experiment over several sample sizes.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Pareto,
    Frechet,
    TRadial,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VariateArgs {
    #[arg(long, value_enum, default_value = "pareto")]
    pub family: Family,
    /// Tail index of the Pareto and Frechet families.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Degrees of freedom of the t-radial family.
    #[arg(long)]
    pub nu: Option<f64>,
    /// Pareto scale.
    #[arg(long = "x-m", default_value_t = 1.0)]
    pub x_m: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub variate: VariateArgs,
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub n: usize,
    /// Comma list; defaults to the origin.
    #[arg(long)]
    pub mu: Option<String>,
    /// `identity` or a file of d rows of d comma-separated values.
    #[arg(long, default_value = "identity")]
    pub sigma: String,
    #[arg(long, env = "SEPHILL_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write column names x1..xd.
    #[arg(long)]
    pub header: bool,
    /// Also write the generating-variate draws, one per line.
    #[arg(long)]
    pub radii_out: Option<PathBuf>,
    #[arg(long, hide = true)]
    pub fixed_radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MeanCov,
    MedianTyler,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "mean-cov")]
    pub method: Method,
    /// Known location; must be given together with --sigma.
    #[arg(long)]
    pub mu: Option<String>,
    /// Known scatter (`identity` or a file); must be given together with --mu.
    #[arg(long)]
    pub sigma: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[arg(long, conflicts_with = "k_list", required_unless_present = "k_list")]
    pub k: Option<usize>,
    /// Comma list of k values.
    #[arg(long)]
    pub k_list: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HillplotArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 1)]
    pub k_min: usize,
    #[arg(long)]
    pub k_max: usize,
    #[arg(long, default_value_t = 1)]
    pub k_step: usize,
    /// Write a `k,gamma_hat` header line.
    #[arg(long)]
    pub header: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyBoundsArgs {
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Fixed dimension; drawn from 2..=5 per trial when omitted.
    #[arg(long)]
    pub dim: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub variate: VariateArgs,
    #[arg(long, default_value_t = 0.01)]
    pub perturbation_scale: f64,
    #[arg(long, env = "SEPHILL_SEED")]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentMethod {
    TrueParams,
    MeanCov,
    MedianTyler,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExperimentArgs {
    /// JSON experiment configuration; replaces the inline model flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub variate: VariateArgs,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long)]
    pub mu: Option<String>,
    #[arg(long, default_value = "identity")]
    pub sigma: String,
    /// Comma list of sample sizes.
    #[arg(long, default_value = "1000,10000")]
    pub n_values: String,
    /// k = ceil(n^beta).
    #[arg(long, conflicts_with = "k_list")]
    pub beta: Option<f64>,
    /// Explicit k per sample size.
    #[arg(long)]
    pub k_list: Option<String>,
    #[arg(long, value_enum, default_value = "mean-cov")]
    pub method: ExperimentMethod,
    #[arg(long, default_value_t = 100)]
    pub replications: usize,
    /// Overrides the configuration's base seed when given.
    #[arg(long, env = "SEPHILL_SEED")]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every available core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-replication CSV.
    #[arg(long)]
    pub records_out: Option<PathBuf>,
}
