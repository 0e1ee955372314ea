use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use stylekit::evalmetrics::read_records;
use stylekit::ingest::read_corpus;
use stylekit::pipeline::{self, ClusterArtifact, PipelineError, RunConfig};
use stylekit::stylefeat::{read_feature_csv, FeatureRow};
use thiserror::Error;

use crate::args::{ClusterArgs, Command, CorpusArgs, EvalArgs, FeaturesArgs, IngestArgs, ModelArgs};
use crate::output::{sibling, write_atomic};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Data(#[from] PipelineError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. } | CliError::Data(_) => 2,
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    write_atomic(path, text.as_bytes()).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn output(config: &RunConfig, given: &Option<PathBuf>, default: &str) -> PathBuf {
    given.clone().unwrap_or_else(|| config.paths.artifact(default))
}

fn load_features(path: &Path) -> Result<Vec<FeatureRow>, CliError> {
    Ok(read_feature_csv(open(path)?).map_err(PipelineError::from)?)
}

fn load_model(path: &Path) -> Result<ClusterArtifact, CliError> {
    Ok(ClusterArtifact::from_json(&read_to_string(path)?)?.1)
}

/// Folds command flags into the configuration; flags win.
pub fn apply_flags(config: &mut RunConfig, command: &Command) {
    match command {
        Command::Ingest(a) => {
            if a.root.is_some() {
                config.paths.corpus_root.clone_from(&a.root);
            }
            if a.author_pattern.is_some() {
                config.ingest.author_pattern.clone_from(&a.author_pattern);
            }
            if let Some(n) = a.max_file_bytes {
                config.ingest.max_file_bytes = n;
            }
        }
        Command::Cluster(a) => {
            if let Some(n) = a.min_cluster_size {
                config.cluster.min_cluster_size = n;
            }
            if let Some(n) = a.min_samples {
                config.cluster.min_samples = n;
            }
            if let Some(e) = a.epsilon {
                config.cluster.cluster_selection_epsilon = e;
            }
        }
        Command::Corpus(a) => {
            if let Some(n) = a.max_lines {
                config.corpus.max_lines = n;
            }
        }
        Command::Eval(a) => {
            if let Some(w) = a.keyword_weight {
                config.metrics.keyword_weight = w;
            }
        }
        Command::Features(_) | Command::Pairs(_) | Command::Classify(_) | Command::Config => {}
    }
}

fn ingest(config: &RunConfig, a: &IngestArgs) -> Result<Value, CliError> {
    let root = config
        .paths
        .corpus_root
        .clone()
        .ok_or_else(|| CliError::Usage("ingest needs a corpus root (argument or paths.corpus_root)".into()))?;
    let out = output(config, &a.output, "corpus.jsonl");
    let (text, report) = pipeline::ingest(&root, &config.ingest)?;
    write(&out, &text)?;
    Ok(json!({"output": out, "report": report}))
}

fn features(config: &RunConfig, a: &FeaturesArgs) -> Result<Value, CliError> {
    let units = read_corpus(open(&a.corpus)?).map_err(PipelineError::from)?;
    let out = output(config, &a.output, "features.csv");
    let (rows, summary) = pipeline::features(&units);
    write(&out, &pipeline::features_csv(&rows, config.seed)?)?;
    Ok(json!({"output": out, "rows": summary.rows, "failed": summary.failed}))
}

fn cluster(config: &RunConfig, a: &ClusterArgs) -> Result<Value, CliError> {
    let rows = load_features(&a.features)?;
    if a.sweep {
        let out = output(config, &a.output, "sweep.csv");
        let sweep = pipeline::sweep(&rows, &config.sweep, config.cluster.standardize, config.repeats, config.seed)?;
        let table = pipeline::sweep_table(&sweep);
        write(&out, &pipeline::sweep_csv(&sweep, config.seed))?;
        write(&sibling(&out, "txt"), &table)?;
        eprint!("{table}");
        return Ok(json!({"output": out, "settings": sweep.len()}));
    }
    let out = output(config, &a.output, "model.json");
    let artifact = pipeline::cluster(&rows, &config.cluster, config.repeats, config.seed)?;
    write(&out, &artifact.to_json(config.seed))?;
    let v = &artifact.validity;
    Ok(json!({
        "output": out,
        "n_points": rows.len(),
        "n_clusters": artifact.model.n_clusters,
        "n_outliers": v.n_outliers,
        "purity": v.purity,
        "baseline_purity": v.baseline_purity,
        "dbi": v.dbi,
    }))
}

fn pairs(config: &RunConfig, a: &ModelArgs) -> Result<Value, CliError> {
    let (rows, model) = (load_features(&a.features)?, load_model(&a.model)?);
    let out = output(config, &a.output, "pairs.csv");
    let reports = pipeline::pairs(&model, &rows, config.repeats, config.seed)?;
    write(&out, &pipeline::pairs_csv(&reports, config.seed))?;
    Ok(json!({"output": out, "pairs": reports.len()}))
}

fn classify(config: &RunConfig, a: &ModelArgs) -> Result<Value, CliError> {
    let (rows, model) = (load_features(&a.features)?, load_model(&a.model)?);
    let out = output(config, &a.output, "classify.csv");
    let results = pipeline::classify(&model, &rows, &config.classify, config.seed)?;
    write(&out, &pipeline::classify_csv(&results, config.seed))?;
    let accuracy: serde_json::Map<String, Value> =
        results.iter().map(|r| (r.classifier.as_str().to_string(), json!(r.accuracy))).collect();
    Ok(json!({"output": out, "accuracy": accuracy}))
}

fn corpus(config: &RunConfig, a: &CorpusArgs) -> Result<Value, CliError> {
    let units = read_corpus(open(&a.corpus)?).map_err(PipelineError::from)?;
    let out = output(config, &a.output, &format!("pairs_{}.jsonl", a.task));
    let (text, report) = pipeline::corpus(&units, a.task, &config.corpus.options());
    write(&out, &text)?;
    Ok(json!({"output": out, "task": a.task, "report": report}))
}

fn eval(config: &RunConfig, a: &EvalArgs) -> Result<Value, CliError> {
    let records = read_records(open(&a.records)?).map_err(PipelineError::from)?;
    let out = output(config, &a.output, "report.json");
    let tasks = (!a.tasks.is_empty()).then_some(a.tasks.as_slice());
    let (json_text, table, report) = pipeline::evaluate(&records, tasks, &config.metrics, config.seed)?;
    write(&out, &json_text)?;
    write(&sibling(&out, "txt"), &table)?;
    let o = &report.overall;
    Ok(json!({
        "output": out,
        "n_records": report.n_records,
        "codebleu": o.codebleu,
        "bleu_nl": o.bleu_nl,
        "diffbleu": o.diffbleu,
        "parsability": o.parsability,
    }))
}

/// Runs one command and returns its summary.
pub fn run(config: &RunConfig, command: &Command) -> Result<Value, CliError> {
    let (name, mut summary) = match command {
        Command::Ingest(a) => ("ingest", ingest(config, a)?),
        Command::Features(a) => ("features", features(config, a)?),
        Command::Cluster(a) => ("cluster", cluster(config, a)?),
        Command::Pairs(a) => ("pairs", pairs(config, a)?),
        Command::Classify(a) => ("classify", classify(config, a)?),
        Command::Corpus(a) => ("corpus", corpus(config, a)?),
        Command::Eval(a) => ("eval", eval(config, a)?),
        Command::Config => {
            print!("{}", config.to_toml());
            return Ok(Value::Null);
        }
    };
    let map = summary.as_object_mut().expect("summaries are objects");
    map.insert("command".into(), json!(name));
    map.insert("seed".into(), json!(config.seed));
    Ok(summary)
}
