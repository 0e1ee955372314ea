use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use stylekit::transforms::Task;

#[derive(Debug, Parser)]
#[command(name = "stylekit", version, about = "Python code-style analysis and style-transfer corpus tools")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (outputs do not depend on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Default directory for outputs not given with -o.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scan a directory of Python files into corpus.jsonl.
    Ingest(IngestArgs),
    /// Compute style vectors for a corpus into features.csv.
    Features(FeaturesArgs),
    /// Fit a density clustering of the style vectors into model.json.
    Cluster(ClusterArgs),
    /// Compare the clustering with authorship for every author pair.
    Pairs(ModelArgs),
    /// Fit surrogate classifiers to the cluster labels.
    Classify(ModelArgs),
    /// Generate the parallel corpus of one style-transfer task.
    Corpus(CorpusArgs),
    /// Score predictions against references.
    Eval(EvalArgs),
    /// Print the resolved configuration as TOML.
    Config,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Corpus root (defaults to paths.corpus_root).
    pub root: Option<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Regex whose `author` group (or first group) names the author of a path.
    #[arg(long)]
    pub author_pattern: Option<String>,
    #[arg(long)]
    pub max_file_bytes: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    pub corpus: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    pub features: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub min_cluster_size: Option<usize>,
    #[arg(long)]
    pub min_samples: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Fit the whole parameter grid of the configuration instead of one model.
    #[arg(long)]
    pub sweep: bool,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    pub features: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    pub corpus: PathBuf,
    #[arg(long)]
    pub task: Task,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub max_lines: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// JSON-lines of {"task","input","prediction","reference"}.
    pub records: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Score only these tasks (repeatable).
    #[arg(long = "task")]
    pub tasks: Vec<Task>,
    #[arg(long)]
    pub keyword_weight: Option<usize>,
}
