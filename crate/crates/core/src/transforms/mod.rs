//! Parallel-corpus generation: each task strips one style attribute from a
//! script (giving the input X) and keeps the original as the target Y.

mod casing;
mod classes;
mod comments;
mod docstrings;
mod listcomp;
mod text;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{line_count, SourceUnit};
use crate::pysyntax::{self, EditError, LexError, ParseError, Span};

pub use casing::{is_dunder, normalize_identifier, restore_casing, strip_casing, CasingOutput, RenameMap};
pub use classes::{declassify, Declassified};
pub use comments::{has_comments, strip_comments};
pub use docstrings::{strip_docstrings, FunctionPair};
pub use listcomp::{lower_listcomps, Lowered};

/// Separator between the prompt and the code in serialized model inputs.
pub const SEP_TOKEN: &str = "<sep>";
pub const DEFAULT_MAX_LINES: usize = 120;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("source does not parse: {0}")]
    Parse(#[from] ParseError),
    #[error("source does not tokenize: {0}")]
    Lex(#[from] LexError),
    #[error(transparent)]
    Edit(#[from] EditError),
    #[error("rewritten source does not parse: {0}")]
    Output(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("unknown task {0:?}")]
    UnknownTask(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Casing,
    Docstring,
    Comment,
    Class,
    Listcomp,
}

impl Task {
    pub const ALL: [Task; 5] = [Task::Casing, Task::Docstring, Task::Comment, Task::Class, Task::Listcomp];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Casing => "casing",
            Task::Docstring => "docstring",
            Task::Comment => "comment",
            Task::Class => "class",
            Task::Listcomp => "listcomp",
        }
    }

    pub fn instruction(self) -> &'static str {
        match self {
            Task::Casing => "transfer: apply casing",
            Task::Docstring => "transfer: add docstring",
            Task::Comment => "transfer: add comments",
            Task::Class => "transfer: add class structure",
            Task::Listcomp => "transfer: use list comprehension",
        }
    }

    /// Tasks whose natural-language output is scored with BLEU-NL.
    pub fn is_natural_language(self) -> bool {
        matches!(self, Task::Comment | Task::Docstring)
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Task {
    type Err = TransformError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL.into_iter().find(|t| t.as_str() == s).ok_or_else(|| TransformError::UnknownTask(s.to_string()))
    }
}

/// Prompt for one or more tasks, instructions joined with ", ".
pub fn prompt(tasks: &[Task]) -> String {
    tasks.iter().map(|t| t.instruction()).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairMeta {
    pub id: String,
    pub span: Span,
    pub collisions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransferPair {
    pub task: Task,
    pub prompt: String,
    pub input: String,
    pub target: String,
    pub meta: PairMeta,
}

impl TransferPair {
    pub fn model_input(&self) -> String {
        format!("{}{SEP_TOKEN}{}", self.prompt, self.input)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusOptions {
    /// Files longer than this are skipped (all tasks but docstring).
    pub max_lines: usize,
}

impl Default for CorpusOptions {
    fn default() -> Self {
        Self { max_lines: DEFAULT_MAX_LINES }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenReport {
    pub units: usize,
    pub pairs: usize,
    /// Units without the attribute the task removes.
    pub skipped: usize,
    pub oversize: usize,
    /// Candidate pairs dropped because X came out equal to Y.
    pub identical: usize,
    /// Units the transform declined (e.g. a class with nothing but `pass`).
    pub unsupported: usize,
    /// Units or pairs that failed to parse or rewrite.
    pub failed: usize,
    /// Emitted pairs carrying at least one casing collision.
    pub collisions: usize,
}

impl GenReport {
    fn merge(mut self, other: GenReport) -> GenReport {
        self.units += other.units;
        self.pairs += other.pairs;
        self.skipped += other.skipped;
        self.oversize += other.oversize;
        self.identical += other.identical;
        self.unsupported += other.unsupported;
        self.failed += other.failed;
        self.collisions += other.collisions;
        self
    }
}

/// Input, target, span in the unit, casing collisions.
type Candidate = (String, String, Span, Vec<String>);

fn unit_pairs(unit: &SourceUnit, task: Task, options: &CorpusOptions) -> (Vec<TransferPair>, GenReport) {
    let mut report = GenReport { units: 1, ..Default::default() };
    let mut pairs = Vec::new();
    let target = if task == Task::Comment {
        if !has_comments(&unit.content) {
            report.skipped += 1;
            return (pairs, report);
        }
        unit.content.clone()
    } else {
        match strip_comments(&unit.content) {
            Ok(t) => t,
            Err(_) => {
                report.failed += 1;
                return (pairs, report);
            }
        }
    };
    if task != Task::Docstring && line_count(&target) > options.max_lines {
        report.oversize += 1;
        return (pairs, report);
    }
    let whole = Span::new(0, target.len());
    let candidates: Result<Vec<Candidate>, TransformError> = match task {
        Task::Comment => strip_comments(&target).map(|x| vec![(x, target.clone(), whole, Vec::new())]),
        Task::Casing => strip_casing(&target).map(|out| vec![(out.text, target.clone(), whole, out.collisions)]),
        Task::Class => match declassify(&target) {
            Ok(None) => Ok(Vec::new()),
            Ok(Some(d)) => Ok(vec![(d.text, target.clone(), whole, Vec::new())]),
            Err(e) => Err(e),
        },
        Task::Listcomp => match lower_listcomps(&target) {
            Ok(None) => Ok(Vec::new()),
            Ok(Some(l)) if l.skipped > 0 => {
                Err(TransformError::Unsupported(format!("{} comprehension(s) cannot be lowered", l.skipped)))
            }
            Ok(Some(l)) => Ok(vec![(l.text, target.clone(), whole, Vec::new())]),
            Err(e) => Err(e),
        },
        Task::Docstring => strip_docstrings(&target)
            .map(|fs| fs.into_iter().map(|f| (f.input, f.target, f.span, Vec::new())).collect()),
    };
    let candidates = match candidates {
        Ok(c) if c.is_empty() => {
            report.skipped += 1;
            return (pairs, report);
        }
        Ok(c) => c,
        Err(TransformError::Unsupported(_)) => {
            report.unsupported += 1;
            return (pairs, report);
        }
        Err(_) => {
            report.failed += 1;
            return (pairs, report);
        }
    };
    for (input, target, span, collisions) in candidates {
        if input == target {
            report.identical += 1;
            continue;
        }
        if !pysyntax::is_parsable(&input) || !pysyntax::is_parsable(&target) {
            report.failed += 1;
            continue;
        }
        report.pairs += 1;
        report.collisions += usize::from(!collisions.is_empty());
        pairs.push(TransferPair {
            task,
            prompt: task.instruction().to_string(),
            input,
            target,
            meta: PairMeta { id: unit.id.clone(), span, collisions },
        });
    }
    (pairs, report)
}

/// Generates the pairs of one task over a corpus. Output order follows the
/// unit order; the report does not depend on scheduling.
pub fn build_corpus(units: &[SourceUnit], task: Task, options: &CorpusOptions) -> (Vec<TransferPair>, GenReport) {
    let per_unit: Vec<(Vec<TransferPair>, GenReport)> =
        units.par_iter().map(|u| unit_pairs(u, task, options)).collect();
    let mut pairs = Vec::new();
    let mut report = GenReport::default();
    for (p, r) in per_unit {
        pairs.extend(p);
        report = report.merge(r);
    }
    (pairs, report)
}

pub fn write_pairs<W: std::io::Write>(pairs: &[TransferPair], mut out: W) -> std::io::Result<()> {
    for pair in pairs {
        writeln!(out, "{}", serde_json::to_string(pair).expect("pair serializes"))?;
    }
    Ok(())
}
