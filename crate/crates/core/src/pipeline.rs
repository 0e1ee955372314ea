//! Stage functions behind the command-line tool. Each stage turns parsed
//! inputs into artifact bytes and a summary; callers decide where the bytes
//! go. Nothing here depends on the size of the thread pool.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{self, ClusterModel, ClusterParams, PairReport, SweepRow, ValidityReport};
use crate::evalmetrics::{self, EvalRecord, EvalReport, MetricOptions};
use crate::ingest::{self, IngestConfig, IngestReport, SourceUnit};
use crate::stylefeat::{self, FeatureRow};
use crate::surrogate::{self, ClassifierKind, ClassifierSpec, Hyperparams};
use crate::transforms::{self, CorpusOptions, GenReport, Task};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_REPEATS: usize = 10;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] ingest::IngestError),
    #[error(transparent)]
    Features(#[from] stylefeat::FeatureError),
    #[error(transparent)]
    Cluster(#[from] cluster::ClusterError),
    #[error(transparent)]
    Validity(#[from] cluster::ValidityError),
    #[error(transparent)]
    Sweep(#[from] cluster::SweepError),
    #[error(transparent)]
    Surrogate(#[from] surrogate::SurrogateError),
    #[error(transparent)]
    Eval(#[from] evalmetrics::EvalError),
    #[error("malformed model file: {0}")]
    Model(#[from] serde_json::Error),
    #[error("{0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Directory scanned by `ingest`.
    pub corpus_root: Option<PathBuf>,
    /// Where artifacts go when a command is not given an explicit path.
    pub out_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self { corpus_root: None, out_dir: PathBuf::from("out") }
    }
}

impl Paths {
    pub fn artifact(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

/// Parameter grid of a clustering sweep; every combination is fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub min_cluster_size: Vec<usize>,
    pub min_samples: Vec<usize>,
    pub epsilon: Vec<f64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self { min_cluster_size: vec![5, 10, 20], min_samples: vec![1, 5, 10], epsilon: vec![0.0, 0.5] }
    }
}

impl SweepGrid {
    pub fn combinations(&self, standardize: bool) -> Vec<ClusterParams> {
        let mut out = Vec::new();
        for &mcs in &self.min_cluster_size {
            for &ms in &self.min_samples {
                for &eps in &self.epsilon {
                    out.push(ClusterParams { standardize, ..ClusterParams::new(mcs, ms, eps) });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub max_lines: usize,
    pub tasks: Vec<Task>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self { max_lines: transforms::DEFAULT_MAX_LINES, tasks: Task::ALL.to_vec() }
    }
}

impl CorpusConfig {
    pub fn options(&self) -> CorpusOptions {
        CorpusOptions { max_lines: self.max_lines }
    }
}

/// Everything a run depends on. Serializes to one TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Random relabelings behind each baseline score.
    pub repeats: usize,
    pub paths: Paths,
    pub ingest: IngestConfig,
    pub cluster: ClusterParams,
    pub sweep: SweepGrid,
    pub classify: Hyperparams,
    pub corpus: CorpusConfig,
    pub metrics: MetricOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            repeats: DEFAULT_REPEATS,
            paths: Paths::default(),
            ingest: IngestConfig::default(),
            cluster: ClusterParams::default(),
            sweep: SweepGrid::default(),
            classify: Hyperparams::default(),
            corpus: CorpusConfig::default(),
            metrics: MetricOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

/// Wraps a JSON artifact with the tool version and run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stamped<T> {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Stamped<T> {
    pub fn new(seed: u64, body: T) -> Self {
        Self { tool: "stylekit".into(), version: env!("CARGO_PKG_VERSION").into(), seed, body }
    }
}

/// First line of every CSV artifact.
pub fn csv_header_comment(seed: u64) -> String {
    format!("# stylekit {} seed={seed}\n", env!("CARGO_PKG_VERSION"))
}

fn to_json<T: Serialize>(seed: u64, body: T) -> String {
    let mut s = serde_json::to_string_pretty(&Stamped::new(seed, body)).expect("artifact serializes");
    s.push('\n');
    s
}

fn csv_text(seed: u64, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields");
    csv_header_comment(seed) + &body
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

// ---- ingest ----

pub fn ingest(root: &Path, config: &IngestConfig) -> Result<(String, IngestReport), PipelineError> {
    let (units, report) = ingest::scan_corpus(root, config)?;
    let mut out = Vec::new();
    ingest::write_corpus(&units, &mut out)?;
    Ok((String::from_utf8(out).expect("json is utf-8"), report))
}

// ---- features ----

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSummary {
    pub rows: usize,
    pub failed: usize,
}

pub fn features(units: &[SourceUnit]) -> (Vec<FeatureRow>, FeatureSummary) {
    use rayon::prelude::*;
    let vectors: Vec<_> = units.par_iter().map(stylefeat::extract_style_vector).collect();
    let mut rows = Vec::new();
    let mut failed = 0;
    for (unit, v) in units.iter().zip(vectors) {
        match v {
            Ok(vector) => rows.push(FeatureRow { id: unit.id.clone(), author: unit.author.clone(), vector }),
            Err(_) => failed += 1,
        }
    }
    let summary = FeatureSummary { rows: rows.len(), failed };
    (rows, summary)
}

pub fn features_csv(rows: &[FeatureRow], seed: u64) -> Result<String, PipelineError> {
    let mut out = csv_header_comment(seed).into_bytes();
    stylefeat::write_feature_csv(rows, &mut out)?;
    Ok(String::from_utf8(out).expect("csv is utf-8"))
}

fn vectors(rows: &[FeatureRow]) -> Vec<Vec<f64>> {
    rows.iter().map(|r| r.vector.to_array().to_vec()).collect()
}

// ---- cluster ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterArtifact {
    pub ids: Vec<String>,
    pub authors: Vec<String>,
    pub validity: ValidityReport,
    pub model: ClusterModel,
}

impl ClusterArtifact {
    pub fn to_json(&self, seed: u64) -> String {
        to_json(seed, self)
    }

    pub fn from_json(text: &str) -> Result<(u64, Self), PipelineError> {
        let stamped: Stamped<Self> = serde_json::from_str(text)?;
        Ok((stamped.seed, stamped.body))
    }

    /// Fails unless `rows` are the points this model was fitted on.
    pub fn check_rows(&self, rows: &[FeatureRow]) -> Result<(), PipelineError> {
        let same = rows.len() == self.ids.len() && rows.iter().zip(&self.ids).all(|(r, id)| &r.id == id);
        if same {
            Ok(())
        } else {
            Err(PipelineError::Mismatch("feature rows do not match the clustered points".into()))
        }
    }
}

/// Fits the model and scores it against the authors: purity, random
/// baseline purity and DBI, computed in the model's standardized space.
pub fn cluster(
    rows: &[FeatureRow],
    params: &ClusterParams,
    repeats: usize,
    seed: u64,
) -> Result<ClusterArtifact, PipelineError> {
    let points = vectors(rows);
    let model = cluster::fit_hdbscan(&points, params)?;
    let scaled: Vec<Vec<f64>> = points.iter().map(|v| model.feature_stats.apply(v)).collect();
    let authors: Vec<String> = rows.iter().map(|r| r.author.clone()).collect();
    let validity = cluster::validity_report(&scaled, &model.labels, &authors, repeats, seed)?;
    Ok(ClusterArtifact { ids: rows.iter().map(|r| r.id.clone()).collect(), authors, validity, model })
}

pub fn sweep(
    rows: &[FeatureRow],
    grid: &SweepGrid,
    standardize: bool,
    repeats: usize,
    seed: u64,
) -> Result<Vec<SweepRow>, PipelineError> {
    let authors: Vec<&str> = rows.iter().map(|r| r.author.as_str()).collect();
    Ok(cluster::sweep(&vectors(rows), &authors, &grid.combinations(standardize), repeats, seed)?)
}

const SWEEP_HEADER: [&str; 8] =
    ["min_cluster_size", "min_samples", "epsilon", "n_clusters", "n_outliers", "purity", "baseline_purity", "dbi"];

fn sweep_cells(r: &SweepRow) -> Vec<String> {
    vec![
        r.min_cluster_size.to_string(),
        r.min_samples.to_string(),
        r.epsilon.to_string(),
        r.n_clusters.to_string(),
        r.n_outliers.to_string(),
        opt(r.purity),
        opt(r.baseline_purity),
        opt(r.dbi),
    ]
}

pub fn sweep_csv(rows: &[SweepRow], seed: u64) -> String {
    csv_text(seed, &SWEEP_HEADER, rows.iter().map(sweep_cells))
}

/// Right-aligned text table; the first column is left-aligned.
pub fn text_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let width = |c: usize| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0);
    let widths: Vec<usize> = (0..header.len()).map(width).collect();
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(c, v)| if c == 0 { format!("{v:<w$}", w = widths[c]) } else { format!("{v:>w$}", w = widths[c]) })
            .collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    for r in rows {
        out.push_str(&line(r.iter().map(|s| s.as_str()).collect()));
    }
    out
}

fn fixed(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.4}"))
}

pub fn sweep_table(rows: &[SweepRow]) -> String {
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.min_cluster_size.to_string(),
                r.min_samples.to_string(),
                r.epsilon.to_string(),
                r.n_clusters.to_string(),
                r.n_outliers.to_string(),
                fixed(r.purity),
                fixed(r.baseline_purity),
                fixed(r.dbi),
            ]
        })
        .collect();
    text_table(&SWEEP_HEADER, &cells)
}

// ---- author pairs ----

/// Pair reports for every two authors with clustered points, best purity
/// gain first.
pub fn pairs(
    artifact: &ClusterArtifact,
    rows: &[FeatureRow],
    repeats: usize,
    seed: u64,
) -> Result<Vec<PairReport>, PipelineError> {
    artifact.check_rows(rows)?;
    let scaled: Vec<Vec<f64>> = vectors(rows).iter().map(|v| artifact.model.feature_stats.apply(v)).collect();
    let labels = &artifact.model.labels;
    let present: BTreeSet<&str> =
        artifact.authors.iter().zip(labels).filter(|(_, &l)| l >= 0).map(|(a, _)| a.as_str()).collect();
    let present: Vec<&str> = present.into_iter().collect();
    let mut reports = Vec::new();
    for (i, a) in present.iter().enumerate() {
        for b in &present[i + 1..] {
            reports.push(cluster::authorship_pair_report(&scaled, labels, &artifact.authors, (a, b), repeats, seed)?);
        }
    }
    reports.sort_by(|x, y| {
        y.purity_improve
            .total_cmp(&x.purity_improve)
            .then_with(|| (&x.author_a, &x.author_b).cmp(&(&y.author_a, &y.author_b)))
    });
    Ok(reports)
}

pub fn pairs_csv(reports: &[PairReport], seed: u64) -> String {
    let header = [
        "author_a",
        "author_b",
        "n_points",
        "purity",
        "baseline_purity",
        "purity_improve",
        "dbi",
        "baseline_dbi",
        "dbi_improve",
    ];
    let rows = reports.iter().map(|r| {
        vec![
            r.author_a.clone(),
            r.author_b.clone(),
            r.n_points.to_string(),
            r.purity.to_string(),
            r.baseline_purity.to_string(),
            r.purity_improve.to_string(),
            opt(r.dbi),
            opt(r.baseline_dbi),
            opt(r.dbi_improve),
        ]
    });
    // The improvement formulas are this tool's own definitions; say so in the file.
    let note = "# purity_improve = purity - baseline_purity; dbi_improve = baseline_dbi - dbi\n";
    let text = csv_text(seed, &header, rows);
    let split = text.find('\n').expect("header line") + 1;
    format!("{}{note}{}", &text[..split], &text[split..])
}

// ---- surrogate classifiers ----

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyRow {
    pub classifier: ClassifierKind,
    pub n_points: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Fits every classifier kind to the cluster labels of the clustered
/// points (outliers left out) and scores it on the fixed held-out split.
pub fn classify(
    artifact: &ClusterArtifact,
    rows: &[FeatureRow],
    hyperparams: &Hyperparams,
    seed: u64,
) -> Result<Vec<ClassifyRow>, PipelineError> {
    artifact.check_rows(rows)?;
    let keep: Vec<usize> = (0..rows.len()).filter(|&i| artifact.model.labels[i] >= 0).collect();
    let x: Vec<Vec<f64>> = keep.iter().map(|&i| rows[i].vector.to_array().to_vec()).collect();
    let y: Vec<i64> = keep.iter().map(|&i| artifact.model.labels[i]).collect();
    ClassifierKind::ALL
        .iter()
        .map(|&kind| {
            let spec = ClassifierSpec { kind, hyperparams: *hyperparams, seed };
            let report = surrogate::train_and_evaluate(&spec, &x, &y, surrogate::SPLIT_SEED)?;
            Ok(ClassifyRow {
                classifier: kind,
                n_points: y.len(),
                accuracy: report.accuracy,
                precision: report.precision,
                recall: report.recall,
                f1: report.f1,
            })
        })
        .collect()
}

pub fn classify_csv(rows: &[ClassifyRow], seed: u64) -> String {
    let header = ["classifier", "n_points", "accuracy", "precision", "recall", "f1"];
    let cells = rows.iter().map(|r| {
        vec![
            r.classifier.as_str().to_string(),
            r.n_points.to_string(),
            r.accuracy.to_string(),
            r.precision.to_string(),
            r.recall.to_string(),
            r.f1.to_string(),
        ]
    });
    csv_text(seed, &header, cells)
}

// ---- corpus and evaluation ----

pub fn corpus(units: &[SourceUnit], task: Task, options: &CorpusOptions) -> (String, GenReport) {
    let (pairs, report) = transforms::build_corpus(units, task, options);
    let mut out = Vec::new();
    transforms::write_pairs(&pairs, &mut out).expect("in-memory write");
    (String::from_utf8(out).expect("json is utf-8"), report)
}

pub fn evaluate(
    records: &[EvalRecord],
    tasks: Option<&[Task]>,
    options: &MetricOptions,
    seed: u64,
) -> Result<(String, String, EvalReport), PipelineError> {
    let report = evalmetrics::evaluate_file(records, tasks, options)?;
    Ok((to_json(seed, &report), evalmetrics::render_table(&report), report))
}
