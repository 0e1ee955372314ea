//! Scores for style-transfer predictions. Each record holds the stripped
//! input X, a prediction and the reference Y.

mod bleu;
mod codebleu;
mod diff;

use std::collections::BTreeMap;
use std::io::BufRead;
use std::sync::LazyLock;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pysyntax::{self, parse, tokenize, NodeKind, SyntaxNode, TokenKind};
use crate::transforms::Task;

pub use bleu::{bleu, clipped_counts, ngram_precision, weighted_bleu, MAX_ORDER, SMOOTHING};
pub use codebleu::{dataflow_edges, dataflow_match, subtrees, syntax_match, CodeBleu, FlowEdge, SUBTREE_DEPTH};
pub use diff::{diff, matching_blocks, Block};

pub const DEFAULT_KEYWORD_WEIGHT: usize = 5;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("reading records: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("line {line}: unknown task {task:?}")]
    UnknownTask { line: usize, task: String },
    #[error("no records to score")]
    Empty,
    #[error("reference does not parse: {0}")]
    Reference(#[from] pysyntax::ParseError),
    #[error("{task} has no natural-language score")]
    NotNaturalLanguage { task: Task },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub task: Task,
    pub input: String,
    pub prediction: String,
    pub reference: String,
}

#[derive(Deserialize)]
struct RawRecord {
    task: String,
    input: String,
    prediction: String,
    reference: String,
}

/// Reads JSON-lines records, skipping blank lines.
pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<EvalRecord>, EvalError> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|source| EvalError::Json { line: i + 1, source })?;
        let task = raw.task.parse().map_err(|_| EvalError::UnknownTask { line: i + 1, task: raw.task.clone() })?;
        records.push(EvalRecord { task, input: raw.input, prediction: raw.prediction, reference: raw.reference });
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricOptions {
    /// Weight of n-grams holding a keyword in the weighted n-gram score.
    pub keyword_weight: usize,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self { keyword_weight: DEFAULT_KEYWORD_WEIGHT }
    }
}

/// Code tokens: everything the tokenizer reads from the source, comments
/// included, layout tokens excluded. Text that does not tokenize is split
/// on whitespace.
pub fn code_tokens(source: &str) -> Vec<String> {
    match tokenize(source) {
        Ok(tokens) => tokens
            .iter()
            .filter(|t| {
                !t.is_synthetic()
                    && !matches!(t.kind, TokenKind::Newline | TokenKind::Indent | TokenKind::Dedent | TokenKind::Eof)
            })
            .map(|t| t.text.to_string())
            .collect(),
        Err(_) => source.split_whitespace().map(str::to_string).collect(),
    }
}

static COMMENT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"#[^\r\n]*").expect("valid pattern"));
static TRIPLE_QUOTED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#"(?s)"""(.*?)"""|'''(.*?)'''"#).expect("valid pattern"));

fn comment_body(text: &str) -> &str {
    text.trim_start_matches('#').trim()
}

/// Inner text of a (possibly implicitly concatenated) string literal.
fn literal_body(literal: &str) -> String {
    let Ok(tokens) = tokenize(literal) else {
        return literal.to_string();
    };
    let mut out = Vec::new();
    for t in tokens.iter().filter(|t| t.kind == TokenKind::String) {
        let s = t.text.trim_start_matches(|c: char| c.is_ascii_alphabetic());
        let quote = if s.starts_with("\"\"\"") || s.starts_with("'''") { 3 } else { 1 };
        if s.len() >= 2 * quote {
            out.push(&s[quote..s.len() - quote]);
        }
    }
    out.join(" ")
}

fn docstrings(tree: &SyntaxNode, source: &str) -> Vec<String> {
    tree.descendants()
        .filter(|n| matches!(n.kind, NodeKind::Module | NodeKind::ClassDef) || n.kind.is_function_def())
        .filter_map(|n| n.docstring())
        .map(|d| literal_body(d.text(source)))
        .collect()
}

/// Natural-language text of `source` for `task`, or `None` when the source
/// cannot be read as Python and the caller should fall back.
fn extract_nl(source: &str, task: Task) -> Option<Vec<String>> {
    match task {
        Task::Comment => {
            parse(source).ok()?;
            let tokens = tokenize(source).ok()?;
            Some(
                tokens
                    .iter()
                    .filter(|t| t.kind == TokenKind::Comment)
                    .map(|t| comment_body(t.text).to_string())
                    .collect(),
            )
        }
        _ => Some(docstrings(&parse(source).ok()?, source)),
    }
}

fn scan_nl(source: &str, task: Task) -> Vec<String> {
    match task {
        Task::Comment => COMMENT.find_iter(source).map(|m| comment_body(m.as_str()).to_string()).collect(),
        _ => TRIPLE_QUOTED
            .captures_iter(source)
            .filter_map(|c| c.get(1).or_else(|| c.get(2)))
            .map(|m| m.as_str().to_string())
            .collect(),
    }
}

fn nl_words(segments: &[String]) -> Vec<&str> {
    segments.iter().flat_map(|s| s.split_whitespace()).collect()
}

/// BLEU between the comments (comment task) or docstrings (docstring task)
/// of the prediction and of the reference.
pub fn bleu_nl(record: &EvalRecord) -> Result<f64, EvalError> {
    if !record.task.is_natural_language() {
        return Err(EvalError::NotNaturalLanguage { task: record.task });
    }
    parse(&record.reference)?;
    let reference = extract_nl(&record.reference, record.task).expect("reference parses");
    let candidate =
        extract_nl(&record.prediction, record.task).unwrap_or_else(|| scan_nl(&record.prediction, record.task));
    let (c, r) = (nl_words(&candidate), nl_words(&reference));
    Ok(match (c.is_empty(), r.is_empty()) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        (false, false) => bleu(&c, &[&r]),
    })
}

pub fn codebleu(record: &EvalRecord, options: &MetricOptions) -> Result<CodeBleu, EvalError> {
    let reference_tree = parse(&record.reference)?;
    let candidate_tree = parse(&record.prediction).ok();
    Ok(codebleu::codebleu(
        &code_tokens(&record.prediction),
        &code_tokens(&record.reference),
        candidate_tree.as_ref(),
        &reference_tree,
        options.keyword_weight,
    ))
}

/// The two token diffs DiffBLEU compares: X→prediction and X→reference.
pub fn record_diffs(record: &EvalRecord) -> (Vec<String>, Vec<String>) {
    let x = code_tokens(&record.input);
    (diff(&x, &code_tokens(&record.prediction)), diff(&x, &code_tokens(&record.reference)))
}

pub fn diffbleu(record: &EvalRecord) -> f64 {
    let (candidate, reference) = record_diffs(record);
    match (candidate.is_empty(), reference.is_empty()) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        (false, false) => bleu(&candidate, &[&reference]),
    }
}

pub fn parsability(records: &[EvalRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let ok = records.iter().filter(|r| pysyntax::is_parsable(&r.prediction)).count();
    ok as f64 / records.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordScores {
    pub codebleu: CodeBleu,
    pub bleu_nl: Option<f64>,
    pub diffbleu: f64,
    pub parsable: bool,
}

pub fn score_record(record: &EvalRecord, options: &MetricOptions) -> Result<RecordScores, EvalError> {
    Ok(RecordScores {
        codebleu: codebleu(record, options)?,
        bleu_nl: if record.task.is_natural_language() { Some(bleu_nl(record)?) } else { None },
        diffbleu: diffbleu(record),
        parsable: pysyntax::is_parsable(&record.prediction),
    })
}

/// Mean scores over a group of records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskScores {
    pub n_records: usize,
    pub codebleu: f64,
    pub ngram: f64,
    pub weighted_ngram: f64,
    pub syntax_match: f64,
    pub dataflow_match: f64,
    /// Only for comment and docstring records.
    pub bleu_nl: Option<f64>,
    pub diffbleu: f64,
    pub parsability: f64,
}

impl TaskScores {
    fn mean(scores: &[&RecordScores]) -> Self {
        let n = scores.len() as f64;
        let avg = |f: &dyn Fn(&RecordScores) -> f64| scores.iter().map(|s| f(s)).sum::<f64>() / n;
        let nl: Vec<f64> = scores.iter().filter_map(|s| s.bleu_nl).collect();
        Self {
            n_records: scores.len(),
            codebleu: avg(&|s| s.codebleu.score),
            ngram: avg(&|s| s.codebleu.ngram),
            weighted_ngram: avg(&|s| s.codebleu.weighted_ngram),
            syntax_match: avg(&|s| s.codebleu.syntax_match),
            dataflow_match: avg(&|s| s.codebleu.dataflow_match),
            bleu_nl: (!nl.is_empty()).then(|| nl.iter().sum::<f64>() / nl.len() as f64),
            diffbleu: avg(&|s| s.diffbleu),
            parsability: avg(&|s| f64::from(u8::from(s.parsable))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_records: usize,
    pub per_task: BTreeMap<Task, TaskScores>,
    pub overall: TaskScores,
}

/// Scores `records` (only those of `tasks`, when given) and averages them
/// per task and overall.
pub fn evaluate_file(
    records: &[EvalRecord],
    tasks: Option<&[Task]>,
    options: &MetricOptions,
) -> Result<EvalReport, EvalError> {
    let selected: Vec<&EvalRecord> = records.iter().filter(|r| tasks.is_none_or(|t| t.contains(&r.task))).collect();
    if selected.is_empty() {
        return Err(EvalError::Empty);
    }
    let scores: Vec<RecordScores> = selected.par_iter().map(|r| score_record(r, options)).collect::<Result<_, _>>()?;
    let mut groups: BTreeMap<Task, Vec<&RecordScores>> = BTreeMap::new();
    for (r, s) in selected.iter().zip(&scores) {
        groups.entry(r.task).or_default().push(s);
    }
    Ok(EvalReport {
        n_records: scores.len(),
        per_task: groups.iter().map(|(t, s)| (*t, TaskScores::mean(s))).collect(),
        overall: TaskScores::mean(&scores.iter().collect::<Vec<_>>()),
    })
}

/// Text table: one row per task and an overall row; `-` where BLEU-NL does
/// not apply.
pub fn render_table(report: &EvalReport) -> String {
    let header = ["task", "n", "CodeBLEU", "BLEU-NL", "DiffBLEU", "Parsability"];
    let mut rows = vec![header.map(str::to_string).to_vec()];
    let row = |name: &str, s: &TaskScores| {
        vec![
            name.to_string(),
            s.n_records.to_string(),
            format!("{:.4}", s.codebleu),
            s.bleu_nl.map_or("-".to_string(), |v| format!("{v:.4}")),
            format!("{:.4}", s.diffbleu),
            format!("{:.4}", s.parsability),
        ]
    };
    for (task, s) in &report.per_task {
        rows.push(row(task.as_str(), s));
    }
    rows.push(row("overall", &report.overall));
    let widths: Vec<usize> = (0..header.len()).map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for r in &rows {
        let cells: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, v)| if c == 0 { format!("{v:<w$}", w = widths[c]) } else { format!("{v:>w$}", w = widths[c]) })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}
