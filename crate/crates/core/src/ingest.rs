//! Corpus ingestion.
//!
//! Walks a directory for `.py` files, drops oversize, non-UTF-8 and
//! unparseable files, deduplicates on the MD5 of the contents and labels each
//! survivor with an author derived from its relative path.

use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use md5::{Digest, Md5};
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::pysyntax;

pub const DEFAULT_MAX_FILE_BYTES: u64 = 1 << 20;
pub const UNKNOWN_AUTHOR: &str = "unknown";

/// One deduplicated Python script.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceUnit {
    pub id: String,
    pub path: String,
    pub author: String,
    pub content: String,
    pub checksum: String,
    pub line_count: usize,
    pub parse_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IngestReport {
    pub scanned: usize,
    pub admitted: usize,
    pub duplicates: usize,
    pub unparseable: usize,
    pub oversize: usize,
    pub non_utf8: usize,
    pub unreadable: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    /// Regex applied to the relative path; capture group 1 (or the group
    /// named `author`) is the author. `None` means first path segment.
    pub author_pattern: Option<String>,
    pub max_file_bytes: u64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self { author_pattern: None, max_file_bytes: DEFAULT_MAX_FILE_BYTES }
    }
}

#[derive(Debug, Clone)]
pub enum AuthorRule {
    FirstSegment,
    Pattern(Regex),
}

impl AuthorRule {
    pub fn from_pattern(pattern: Option<&str>) -> Result<Self, IngestError> {
        match pattern {
            None => Ok(Self::FirstSegment),
            Some(p) => Ok(Self::Pattern(Regex::new(p)?)),
        }
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read corpus root {path}: {source}")]
    Root { path: PathBuf, source: std::io::Error },
    #[error("invalid author pattern: {0}")]
    Pattern(#[from] regex::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed corpus line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
}

/// Lowercase hex MD5 of `bytes`.
pub fn checksum(bytes: &[u8]) -> String {
    let digest = Md5::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Number of lines, counting a final unterminated line; never below 1.
pub fn line_count(text: &str) -> usize {
    let newlines = text.bytes().filter(|&b| b == b'\n').count();
    let tail = usize::from(!text.is_empty() && !text.ends_with('\n'));
    (newlines + tail).max(1)
}

pub fn author_of(path: &str, rule: &AuthorRule) -> String {
    match rule {
        AuthorRule::FirstSegment => match path.split_once('/') {
            Some((first, _)) if !first.is_empty() => first.to_string(),
            _ => UNKNOWN_AUTHOR.to_string(),
        },
        AuthorRule::Pattern(re) => re
            .captures(path)
            .and_then(|c| c.name("author").or_else(|| c.get(1)))
            .map(|m| m.as_str())
            .filter(|s| !s.is_empty())
            .unwrap_or(UNKNOWN_AUTHOR)
            .to_string(),
    }
}

enum Outcome {
    Unreadable,
    Oversize,
    NonUtf8,
    Unparseable,
    Admitted { content: String, checksum: String },
}

fn examine(path: &Path, max_bytes: u64) -> Outcome {
    match std::fs::metadata(path) {
        Ok(m) if m.len() > max_bytes => return Outcome::Oversize,
        Ok(_) => {}
        Err(_) => return Outcome::Unreadable,
    }
    let Ok(bytes) = std::fs::read(path) else {
        return Outcome::Unreadable;
    };
    if bytes.len() as u64 > max_bytes {
        return Outcome::Oversize;
    }
    let sum = checksum(&bytes);
    let Ok(content) = String::from_utf8(bytes) else {
        return Outcome::NonUtf8;
    };
    if !pysyntax::is_parsable(&content) {
        return Outcome::Unparseable;
    }
    Outcome::Admitted { content, checksum: sum }
}

fn relative_path(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect::<Vec<_>>().join("/")
}

/// Scans `root` for Python files. Units come back ordered by relative path;
/// among byte-identical files the lexicographically first path wins.
pub fn scan_corpus(root: &Path, config: &IngestConfig) -> Result<(Vec<SourceUnit>, IngestReport), IngestError> {
    std::fs::read_dir(root).map_err(|source| IngestError::Root { path: root.to_path_buf(), source })?;
    let rule = AuthorRule::from_pattern(config.author_pattern.as_deref())?;

    let mut report = IngestReport::default();
    let mut paths = Vec::new();
    for entry in WalkDir::new(root).follow_links(false) {
        match entry {
            Ok(e) if e.file_type().is_file() && e.path().extension().is_some_and(|x| x == "py") => {
                paths.push((relative_path(root, e.path()), e.into_path()));
            }
            Ok(_) => {}
            Err(_) => report.unreadable += 1,
        }
    }
    paths.sort();

    let outcomes: Vec<Outcome> = paths.par_iter().map(|(_, p)| examine(p, config.max_file_bytes)).collect();

    let mut seen = HashSet::new();
    let mut units = Vec::new();
    for ((rel, _), outcome) in paths.into_iter().zip(outcomes) {
        report.scanned += 1;
        match outcome {
            Outcome::Unreadable => report.unreadable += 1,
            Outcome::Oversize => report.oversize += 1,
            Outcome::NonUtf8 => report.non_utf8 += 1,
            Outcome::Unparseable => report.unparseable += 1,
            Outcome::Admitted { content, checksum } => {
                if !seen.insert(checksum.clone()) {
                    report.duplicates += 1;
                    continue;
                }
                units.push(SourceUnit {
                    id: checksum[..16].to_string(),
                    author: author_of(&rel, &rule),
                    path: rel,
                    line_count: line_count(&content),
                    content,
                    checksum,
                    parse_ok: true,
                });
            }
        }
    }
    report.admitted = units.len();
    Ok((units, report))
}

pub fn write_corpus<W: Write>(units: &[SourceUnit], mut out: W) -> Result<(), IngestError> {
    for unit in units {
        let line = serde_json::to_string(unit).expect("unit serializes");
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_corpus<R: BufRead>(input: R) -> Result<Vec<SourceUnit>, IngestError> {
    let mut units = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let unit = serde_json::from_str(&line).map_err(|source| IngestError::Json { line: i + 1, source })?;
        units.push(unit);
    }
    Ok(units)
}
