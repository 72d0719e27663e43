use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Seed used when neither `--seed` nor `CATGINI_SEED` is given.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(
    name = "catgini",
    version,
    about = "Gini-based independence test between a continuous and a categorical variable"
)]
pub struct Cli {
    /// Seed for every random stream (permutations, simulations).
    #[arg(long, global = true, env = "CATGINI_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Table)]
    pub output: OutputFormat,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test independence of x and y.
    Test(TestArgs),
    /// Estimate Δ and its per-category components.
    Estimate(EstimateArgs),
    /// Size or power study on a built-in scenario.
    Simulate(SimulateArgs),
    /// Per-category kernel density series for external plotting.
    Density(DensityArgs),
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Column holding the continuous variable.
    #[arg(long)]
    pub x_col: String,
    /// Column holding the category labels.
    #[arg(long)]
    pub y_col: String,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TestMethod {
    Jel,
    Normal,
    Permutation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VarianceSourceArg {
    MainText,
    Appendix,
    Jackknife,
}

impl From<VarianceSourceArg> for catgini::VarianceSource {
    fn from(v: VarianceSourceArg) -> Self {
        match v {
            VarianceSourceArg::MainText => Self::MainText,
            VarianceSourceArg::Appendix => Self::Appendix,
            VarianceSourceArg::Jackknife => Self::Jackknife,
        }
    }
}

#[derive(Debug, Args)]
pub struct TestArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = TestMethod::Jel)]
    pub method: TestMethod,
    /// Only used with `--method normal`.
    #[arg(long, value_enum, default_value_t = VarianceSourceArg::Jackknife)]
    pub variance_source: VarianceSourceArg,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Number of permutations for `--method permutation`.
    #[arg(long, default_value_t = 999)]
    pub reps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PathArg {
    Brute,
    Fast,
}

impl From<PathArg> for catgini::EstimatorPath {
    fn from(p: PathArg) -> Self {
        match p {
            PathArg::Brute => Self::Brute,
            PathArg::Fast => Self::Fast,
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = PathArg::Fast)]
    pub path: PathArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    Type1Lognormal,
    MixBalanced,
    MixLight,
    MixHeavy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimMethod {
    Jel,
    Normal,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, required_unless_present = "reproduce_paper")]
    pub scenario: Option<ScenarioArg>,
    /// Log-scale location for `type1-lognormal`.
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    /// Log-scale spread for `type1-lognormal`.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Number of equiprobable categories for `type1-lognormal`.
    #[arg(long, default_value_t = 6)]
    pub categories: usize,
    /// Sample sizes; repeat or comma-separate.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "100")]
    pub n: Vec<usize>,
    /// Replications per sample size (default 2000 for size, 1000 for power).
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value_t = SimMethod::Jel)]
    pub method: SimMethod,
    /// Run the full published grid: both lognormal size studies and the
    /// three mixture power studies at n = 20, 40, …, 100.
    #[arg(long, conflicts_with = "scenario")]
    pub reproduce_paper: bool,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = crate::density::GRID_POINTS)]
    pub grid_points: usize,
}
