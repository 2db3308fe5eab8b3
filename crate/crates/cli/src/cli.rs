use std::path::PathBuf;

use benchsubset::score_table::TargetStat;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "benchsubset", version, about = "Find small benchmark subsets that predict the full-suite summary score")]
pub struct Cli {
    /// Worker threads for the search (0 = one per core). Does not affect results.
    #[arg(long, global = true, env = "BENCHSUBSET_THREADS", default_value_t = 0)]
    pub threads: usize,

    /// Suppress progress and human-readable output.
    #[arg(long, global = true)]
    pub quiet: bool,

    /// Print the main result document as JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,

    /// Directory for output files.
    #[arg(long, global = true, default_value = "benchsubset-out")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exhaustively score every subset of one size.
    Search(SearchArgs),
    /// Run the nested 5/3/1, validation and 10-game searches.
    Pipeline(PipelineArgs),
    /// Apply a model file to raw scores.
    Predict(PredictArgs),
    /// Diagnostics on a score table.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Raw score CSV: `algorithm,<environment>,...`.
    #[arg(long)]
    pub scores: PathBuf,

    /// Normalization CSV `environment,random,human` (default: the shipped table).
    #[arg(long)]
    pub norms: Option<PathBuf>,

    /// Drop algorithms with fewer scores than this.
    #[arg(long, default_value_t = 40, value_parser = clap::value_parser!(u64).range(1..))]
    pub min_games: u64,

    /// Then drop environments reported by fewer algorithms than this.
    #[arg(long = "min-algos", default_value_t = 40, value_parser = clap::value_parser!(u64).range(1..))]
    pub min_algorithms: u64,

    /// Per-algorithm summary statistic used as the target.
    #[arg(long, default_value_t = TargetStat::Median)]
    pub target: TargetStat,
}

#[derive(Debug, Clone, Args)]
pub struct CvArgs {
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(2..))]
    pub folds: u64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub cv: CvArgs,

    /// Subset size.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..=16))]
    pub size: u64,

    /// Environment every subset must contain (repeatable).
    #[arg(long = "include")]
    pub include: Vec<String>,

    /// Environment no subset may contain (repeatable).
    #[arg(long = "exclude")]
    pub exclude: Vec<String>,

    /// Number of ranked subsets to keep.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub top_k: u64,

    /// Fit an intercept in the subset models.
    #[arg(long)]
    pub intercept: bool,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[command(flatten)]
    pub cv: CvArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model JSON file.
    #[arg(long)]
    pub model: PathBuf,

    /// Raw score CSV.
    #[arg(long)]
    pub scores: PathBuf,

    /// Normalization CSV (default: the shipped table).
    #[arg(long)]
    pub norms: Option<PathBuf>,

    /// Column of the score file holding each algorithm's true summary.
    #[arg(long)]
    pub true_summary: Option<String>,

    /// Also report scores relative to this algorithm.
    #[arg(long)]
    pub baseline: Option<String>,

    /// Fail when the model was fitted against a different normalization table.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Rank environments by how well each alone predicts the target.
    RankSingle(RankSingleArgs),
    /// Pairwise correlation of environments.
    Correlate(CorrelateArgs),
    /// Compare a model's errors across weak, middling and strong algorithms.
    Fairness(FairnessArgs),
}

#[derive(Debug, Args)]
pub struct RankSingleArgs {
    #[command(flatten)]
    pub data: DataArgs,
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is not in [0, 1]"))
    }
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Pairs with PCC strictly above this are marked highly correlated.
    #[arg(long, default_value_t = 0.9, value_parser = unit_interval)]
    pub threshold: f64,

    /// Number of pairs to report.
    #[arg(long, default_value_t = 24)]
    pub top: usize,

    /// Write the pair graph in DOT format to this path.
    #[arg(long)]
    pub dot: Option<PathBuf>,

    /// Category sidecar CSV `environment,category` (default: the shipped one).
    #[arg(long)]
    pub categories: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FairnessArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Model JSON file to audit.
    #[arg(long)]
    pub model: PathBuf,
}
