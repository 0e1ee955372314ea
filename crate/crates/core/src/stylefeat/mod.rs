//! The 17-dimensional style vector of a Python script.

mod casing;

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use casing::{classify_casing, CasingClass};

use crate::ingest::{line_count, SourceUnit};
use crate::pysyntax::{self, NodeKind, SyntaxNode, TokenKind};

pub const FEATURE_COUNT: usize = 17;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "snake_var_ratio",
    "snake_func_ratio",
    "snake_class_ratio",
    "ucamel_var_ratio",
    "ucamel_func_ratio",
    "ucamel_class_ratio",
    "lcamel_var_ratio",
    "lcamel_func_ratio",
    "lcamel_class_ratio",
    "docstring_density",
    "comment_density",
    "avg_func_decorators",
    "avg_class_decorators",
    "avg_class_inheritance",
    "listcomp_per_100loc",
    "generator_per_100loc",
    "lambda_per_100loc",
];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StyleVector {
    pub snake_var_ratio: f64,
    pub snake_func_ratio: f64,
    pub snake_class_ratio: f64,
    pub ucamel_var_ratio: f64,
    pub ucamel_func_ratio: f64,
    pub ucamel_class_ratio: f64,
    pub lcamel_var_ratio: f64,
    pub lcamel_func_ratio: f64,
    pub lcamel_class_ratio: f64,
    pub docstring_density: f64,
    pub comment_density: f64,
    pub avg_func_decorators: f64,
    pub avg_class_decorators: f64,
    pub avg_class_inheritance: f64,
    pub listcomp_per_100loc: f64,
    pub generator_per_100loc: f64,
    pub lambda_per_100loc: f64,
}

impl StyleVector {
    /// Values in `FEATURE_NAMES` order.
    pub fn to_array(&self) -> [f64; FEATURE_COUNT] {
        [
            self.snake_var_ratio,
            self.snake_func_ratio,
            self.snake_class_ratio,
            self.ucamel_var_ratio,
            self.ucamel_func_ratio,
            self.ucamel_class_ratio,
            self.lcamel_var_ratio,
            self.lcamel_func_ratio,
            self.lcamel_class_ratio,
            self.docstring_density,
            self.comment_density,
            self.avg_func_decorators,
            self.avg_class_decorators,
            self.avg_class_inheritance,
            self.listcomp_per_100loc,
            self.generator_per_100loc,
            self.lambda_per_100loc,
        ]
    }

    pub fn from_array(v: [f64; FEATURE_COUNT]) -> Self {
        Self {
            snake_var_ratio: v[0],
            snake_func_ratio: v[1],
            snake_class_ratio: v[2],
            ucamel_var_ratio: v[3],
            ucamel_func_ratio: v[4],
            ucamel_class_ratio: v[5],
            lcamel_var_ratio: v[6],
            lcamel_func_ratio: v[7],
            lcamel_class_ratio: v[8],
            docstring_density: v[9],
            comment_density: v[10],
            avg_func_decorators: v[11],
            avg_class_decorators: v[12],
            avg_class_inheritance: v[13],
            listcomp_per_100loc: v[14],
            generator_per_100loc: v[15],
            lambda_per_100loc: v[16],
        }
    }
}

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("source does not parse: {0}")]
    Parse(#[from] pysyntax::ParseError),
    #[error("source does not tokenize: {0}")]
    Lex(#[from] pysyntax::LexError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad feature table: {0}")]
    Table(String),
}

#[derive(Default)]
struct CasingTally {
    snake: usize,
    upper: usize,
    lower: usize,
    total: usize,
}

impl CasingTally {
    fn add(&mut self, name: &str) {
        self.total += 1;
        match classify_casing(name) {
            CasingClass::Snake => self.snake += 1,
            CasingClass::UpperCamel => self.upper += 1,
            CasingClass::LowerCamel => self.lower += 1,
            CasingClass::Other => {}
        }
    }

    fn ratios(&self) -> (f64, f64, f64) {
        if self.total == 0 {
            return (0.0, 0.0, 0.0);
        }
        let t = self.total as f64;
        (self.snake as f64 / t, self.upper as f64 / t, self.lower as f64 / t)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Collects bound names in an assignment target.
fn target_names<'t>(node: &'t SyntaxNode, out: &mut Vec<&'t str>) {
    match node.kind {
        NodeKind::Name => out.extend(node.name.as_deref()),
        NodeKind::Tuple | NodeKind::List | NodeKind::Starred => {
            for child in &node.children {
                target_names(child, out);
            }
        }
        _ => {}
    }
}

/// Variables are assignment targets (plain, augmented, annotated and `:=`)
/// plus every parameter. Loop, comprehension, `with` and `except` targets are
/// not variables here.
fn variable_names(tree: &SyntaxNode) -> Vec<&str> {
    let mut out = Vec::new();
    for node in tree.descendants() {
        match node.kind {
            NodeKind::Assign => {
                for target in &node.children[..node.children.len() - 1] {
                    target_names(target, &mut out);
                }
            }
            NodeKind::AugAssign | NodeKind::AnnAssign | NodeKind::NamedExpr => {
                target_names(&node.children[0], &mut out)
            }
            NodeKind::Param | NodeKind::VarArgParam | NodeKind::KwArgParam => out.extend(node.name.as_deref()),
            _ => {}
        }
    }
    out
}

fn base_count(class: &SyntaxNode) -> usize {
    class.child(NodeKind::Arguments).map_or(0, |args| {
        args.children.iter().filter(|a| !matches!(a.kind, NodeKind::Keyword | NodeKind::DoubleStarred)).count()
    })
}

/// Computes the style vector of one source text.
pub fn style_vector(source: &str) -> Result<StyleVector, FeatureError> {
    let tree = pysyntax::parse(source)?;
    let tokens = pysyntax::tokenize(source)?;
    let lines = line_count(source) as f64;

    let mut vars = CasingTally::default();
    for name in variable_names(&tree) {
        vars.add(name);
    }
    let mut funcs = CasingTally::default();
    let mut classes = CasingTally::default();
    let (mut func_decorators, mut class_decorators, mut bases) = (0, 0, 0);
    let mut documented = usize::from(tree.docstring().is_some());
    let (mut listcomps, mut generators, mut lambdas) = (0usize, 0usize, 0usize);
    for node in tree.descendants() {
        match node.kind {
            k if k.is_function_def() => {
                funcs.add(node.name.as_deref().unwrap_or_default());
                func_decorators += node.decorators().count();
                documented += usize::from(node.docstring().is_some());
            }
            NodeKind::ClassDef => {
                classes.add(node.name.as_deref().unwrap_or_default());
                class_decorators += node.decorators().count();
                bases += base_count(node);
                documented += usize::from(node.docstring().is_some());
            }
            NodeKind::ListComp => listcomps += 1,
            NodeKind::GeneratorExp => generators += 1,
            NodeKind::Lambda => lambdas += 1,
            _ => {}
        }
    }

    let line_starts: Vec<usize> = std::iter::once(0).chain(source.match_indices('\n').map(|(i, _)| i + 1)).collect();
    let commented: BTreeSet<usize> = tokens
        .iter()
        .filter(|t| t.kind == TokenKind::Comment)
        .map(|t| line_starts.partition_point(|&s| s <= t.span.start))
        .collect();

    let (snake_var, ucamel_var, lcamel_var) = vars.ratios();
    let (snake_func, ucamel_func, lcamel_func) = funcs.ratios();
    let (snake_class, ucamel_class, lcamel_class) = classes.ratios();
    Ok(StyleVector {
        snake_var_ratio: snake_var,
        snake_func_ratio: snake_func,
        snake_class_ratio: snake_class,
        ucamel_var_ratio: ucamel_var,
        ucamel_func_ratio: ucamel_func,
        ucamel_class_ratio: ucamel_class,
        lcamel_var_ratio: lcamel_var,
        lcamel_func_ratio: lcamel_func,
        lcamel_class_ratio: lcamel_class,
        docstring_density: ratio(documented, 1 + funcs.total + classes.total),
        comment_density: (commented.len() as f64 / lines).min(1.0),
        avg_func_decorators: ratio(func_decorators, funcs.total),
        avg_class_decorators: ratio(class_decorators, classes.total),
        avg_class_inheritance: ratio(bases, classes.total),
        listcomp_per_100loc: listcomps as f64 * 100.0 / lines,
        generator_per_100loc: generators as f64 * 100.0 / lines,
        lambda_per_100loc: lambdas as f64 * 100.0 / lines,
    })
}

pub fn extract_style_vector(unit: &SourceUnit) -> Result<StyleVector, FeatureError> {
    style_vector(&unit.content)
}

/// One row of the exported feature table.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub id: String,
    pub author: String,
    pub vector: StyleVector,
}

pub fn write_feature_csv<W: Write>(rows: &[FeatureRow], out: W) -> Result<(), FeatureError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id", "author"];
    header.extend(FEATURE_NAMES);
    w.write_record(&header)?;
    for row in rows {
        let mut record = vec![row.id.clone(), row.author.clone()];
        record.extend(row.vector.to_array().iter().map(|v| v.to_string()));
        w.write_record(&record)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_feature_csv<R: std::io::Read>(input: R) -> Result<Vec<FeatureRow>, FeatureError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let header = r.headers()?.clone();
    let expected: Vec<&str> = ["id", "author"].into_iter().chain(FEATURE_NAMES).collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(FeatureError::Table("unexpected header".into()));
    }
    let mut rows = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let mut values = [0.0; FEATURE_COUNT];
        for (k, slot) in values.iter_mut().enumerate() {
            let raw = &record[k + 2];
            *slot = raw.parse().map_err(|_| FeatureError::Table(format!("row {}: bad number {raw:?}", i + 1)))?;
        }
        rows.push(FeatureRow {
            id: record[0].to_string(),
            author: record[1].to_string(),
            vector: StyleVector::from_array(values),
        });
    }
    Ok(rows)
}
