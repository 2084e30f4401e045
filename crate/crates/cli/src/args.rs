use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ranker_core::experiments::SweepVariable;
use ranker_core::metrics::parse_metric_list;
use ranker_core::Metric;

#[derive(Debug, Parser)]
#[command(
    name = "ranker",
    version,
    about = "Train, evaluate and analyse pairwise neural rankers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model on a LETOR-format file.
    Train(TrainArgs),
    /// Score a model on a LETOR-format file and write a metrics report.
    Evaluate(EvaluateArgs),
    /// Write the model's ranking of every query.
    Rank(RankArgs),
    /// Generate a synthetic train/test pair.
    Synth(SynthArgs),
    /// Run the synthetic evaluation protocol over a range of one dataset parameter.
    Sweep(SweepArgs),
    /// Nested cross-validation with hyperparameter search over predefined folds.
    Gridsearch(GridsearchArgs),
    /// Head outputs of successive documents in a model-sorted list.
    Peaks(PeaksArgs),
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Seed for all randomness of the run [default: the config's, else 0].
    #[arg(long, env = "RANKER_SEED")]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one configuration key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE", value_parser = parse_key_value)]
    pub overrides: Vec<(String, String)>,
}

#[derive(Debug, Args)]
pub struct GradeArgs {
    /// Largest grade accepted when reading LETOR files.
    #[arg(long, default_value_t = ranker_core::letor::DEFAULT_MAX_GRADE, conflicts_with = "no_grade_limit")]
    pub max_grade: u32,
    /// Accept any non-negative grade.
    #[arg(long)]
    pub no_grade_limit: bool,
}

#[derive(Debug, Args)]
pub struct ManifestArg {
    /// Where to write the run manifest [default: next to the main output].
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Output model file.
    #[arg(long)]
    pub model: PathBuf,
    /// Standardize features with statistics of the training file; they are
    /// written to `<model>.norm`.
    #[arg(long)]
    pub normalize: bool,
    /// Train on grades binarized at this threshold.
    #[arg(long)]
    pub binarize: Option<u32>,
    /// Per-epoch training log (CSV).
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub grades: GradeArgs,
    #[command(flatten)]
    pub manifest: ManifestArg,
}

#[derive(Debug, Args)]
pub struct ModelInput {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Feature statistics to apply [default: `<model>.norm` if it exists].
    #[arg(long, conflicts_with = "raw_features")]
    pub normalizer: Option<PathBuf>,
    /// Use features as read even if `<model>.norm` exists.
    #[arg(long)]
    pub raw_features: bool,
    #[command(flatten)]
    pub grades: GradeArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub input: ModelInput,
    /// Comma-separated metrics, e.g. `ndcg@10,map`.
    #[arg(long, default_value = "ndcg@10,map", value_parser = parse_metrics)]
    pub metrics: MetricList,
    /// Grades at or above this count as relevant for MAP.
    #[arg(long, default_value_t = 1)]
    pub map_threshold: u32,
    /// Value of the `fold` column.
    #[arg(long, default_value = "all")]
    pub fold_id: String,
    /// Report CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-query values CSV.
    #[arg(long)]
    pub per_query: Option<PathBuf>,
    #[command(flatten)]
    pub manifest: ManifestArg,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub input: ModelInput,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub manifest: ManifestArg,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory receiving train.txt, test.txt and classes.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub manifest: ManifestArg,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_parser = parse_variable)]
    pub variable: SweepVariable,
    /// Comma-separated values [default: a built-in range per variable].
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub values: Option<Vec<f64>>,
    /// Sweep CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub manifest: ManifestArg,
}

#[derive(Debug, Args)]
pub struct GridsearchArgs {
    /// Directory with Fold1..FoldN subdirectories holding train.txt and test.txt.
    #[arg(long)]
    pub folds_dir: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub n_folds: usize,
    /// Grid file (`key = v1 ; v2` lines) [default: built-in LETOR grid].
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Metric the selection maximizes.
    #[arg(long, default_value = "ndcg@10", value_parser = parse_metric)]
    pub metric: Metric,
    #[arg(long, default_value_t = 5)]
    pub internal_folds: usize,
    /// Training grades are binarized at this threshold; 0 keeps them.
    #[arg(long, default_value_t = 1)]
    pub binarize: u32,
    #[arg(long, default_value_t = 1)]
    pub map_threshold: u32,
    /// Append vali.txt to each training split.
    #[arg(long)]
    pub merge_validation: bool,
    /// Skip feature standardization.
    #[arg(long)]
    pub no_normalize: bool,
    /// Report CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Selected grid point per fold (CSV).
    #[arg(long)]
    pub selection: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub grades: GradeArgs,
    #[command(flatten)]
    pub manifest: ManifestArg,
}

#[derive(Debug, Args)]
pub struct PeaksArgs {
    #[command(flatten)]
    pub input: ModelInput,
    /// Query to analyse [default: the first one in the file].
    #[arg(long)]
    pub qid: Option<u64>,
    /// Number of classes to separate; without it, peaks above mean + 2 std are reported.
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub manifest: ManifestArg,
}

#[derive(Debug, Clone)]
pub struct MetricList(pub Vec<Metric>);

fn parse_metrics(s: &str) -> Result<MetricList, String> {
    parse_metric_list(s).map(MetricList).map_err(|e| e.to_string())
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse().map_err(|e: ranker_core::Error| e.to_string())
}

fn parse_variable(s: &str) -> Result<SweepVariable, String> {
    s.parse().map_err(|e: ranker_core::Error| e.to_string())
}

fn parse_key_value(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, found `{s}`"))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(format!("empty key in `{s}`"));
    }
    Ok((k.to_string(), v.trim().to_string()))
}
