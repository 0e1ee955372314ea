//! Classical classifiers that predict cluster labels from style vectors.

mod linear;
mod metrics;
mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use linear::{GaussianNb, LogisticRegression, VARIANCE_FLOOR};
pub use metrics::{classification_report, stratified_split, ClassMetrics, ClassificationReport};
pub use tree::{DecisionTree, RandomForest, TreeNode};

use linear::LogisticParams;
use tree::{ForestParams, TreeParams};

pub const TEST_FRACTION: f64 = 0.2;
/// Seed of the held-out split, fixed so that every run scores on the same points.
pub const SPLIT_SEED: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    DecisionTree,
    RandomForest,
    GaussianNb,
    LogisticRegression,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::DecisionTree,
        ClassifierKind::RandomForest,
        ClassifierKind::GaussianNb,
        ClassifierKind::LogisticRegression,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::DecisionTree => "decision_tree",
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::GaussianNb => "gaussian_nb",
            ClassifierKind::LogisticRegression => "logistic_regression",
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = SurrogateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| SurrogateError::InvalidSpec(format!("unknown classifier kind {s:?}")))
    }
}

/// Knobs for every kind; each classifier reads only its own.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub n_trees: usize,
    /// Features tried per split in a forest; `None` means ⌊√d⌋.
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_split: 2,
            n_trees: 100,
            max_features: None,
            bootstrap: true,
            learning_rate: 0.1,
            epochs: 500,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    #[serde(default)]
    pub hyperparams: Hyperparams,
    #[serde(default)]
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind) -> Self {
        Self { kind, hyperparams: Hyperparams::default(), seed: 0 }
    }

    fn validate(&self) -> Result<(), SurrogateError> {
        let h = &self.hyperparams;
        if h.n_trees == 0 {
            return Err(SurrogateError::InvalidSpec("n_trees must be at least 1".into()));
        }
        if h.max_depth == Some(0) {
            return Err(SurrogateError::InvalidSpec("max_depth must be at least 1".into()));
        }
        if h.max_features == Some(0) {
            return Err(SurrogateError::InvalidSpec("max_features must be at least 1".into()));
        }
        if !(h.learning_rate.is_finite() && h.learning_rate > 0.0) {
            return Err(SurrogateError::InvalidSpec("learning_rate must be positive".into()));
        }
        if !(h.l2.is_finite() && h.l2 >= 0.0) {
            return Err(SurrogateError::InvalidSpec("l2 must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("training data holds a single class; at least two are needed")]
    SingleClass,
    #[error("{rows} feature rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("expected {expected} features, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("no training rows")]
    Empty,
    #[error("test set is empty")]
    EmptyTestSet,
    #[error("non-finite feature at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("invalid classifier spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classifier {
    DecisionTree(DecisionTree),
    RandomForest(RandomForest),
    GaussianNb(GaussianNb),
    LogisticRegression(LogisticRegression),
}

impl Classifier {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Classifier::DecisionTree(_) => ClassifierKind::DecisionTree,
            Classifier::RandomForest(_) => ClassifierKind::RandomForest,
            Classifier::GaussianNb(_) => ClassifierKind::GaussianNb,
            Classifier::LogisticRegression(_) => ClassifierKind::LogisticRegression,
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Classifier::GaussianNb(m) => m.mean.first().map(Vec::len),
            Classifier::LogisticRegression(m) => Some(m.mean.len()),
            _ => None,
        }
    }

    pub fn predict(&self, x: &[f64]) -> i64 {
        match self {
            Classifier::DecisionTree(m) => m.predict(x),
            Classifier::RandomForest(m) => m.predict(x),
            Classifier::GaussianNb(m) => m.predict(x),
            Classifier::LogisticRegression(m) => m.predict(x),
        }
    }

    pub fn predict_all(&self, features: &[Vec<f64>]) -> Vec<i64> {
        features.iter().map(|x| self.predict(x)).collect()
    }
}

fn check(features: &[Vec<f64>], labels: &[i64]) -> Result<usize, SurrogateError> {
    if features.len() != labels.len() {
        return Err(SurrogateError::LengthMismatch { rows: features.len(), labels: labels.len() });
    }
    let dim = features.first().ok_or(SurrogateError::Empty)?.len();
    for (row, x) in features.iter().enumerate() {
        if x.len() != dim {
            return Err(SurrogateError::Dimension { expected: dim, found: x.len() });
        }
        if let Some(col) = x.iter().position(|v| !v.is_finite()) {
            return Err(SurrogateError::NonFinite { row, col });
        }
    }
    Ok(dim)
}

/// Fits a classifier. Deterministic for a given spec, including its seed.
pub fn train(spec: &ClassifierSpec, features: &[Vec<f64>], labels: &[i64]) -> Result<Classifier, SurrogateError> {
    spec.validate()?;
    let dim = check(features, labels)?;
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(SurrogateError::SingleClass);
    }
    let y: Vec<usize> = labels.iter().map(|l| classes.binary_search(l).expect("label is known")).collect();
    let h = &spec.hyperparams;
    let tree_params =
        TreeParams { max_depth: h.max_depth, min_samples_split: h.min_samples_split.max(2), max_features: None };
    Ok(match spec.kind {
        ClassifierKind::DecisionTree => {
            Classifier::DecisionTree(tree::fit_tree(features, &y, &classes, tree_params, None))
        }
        ClassifierKind::RandomForest => {
            let max_features = h.max_features.unwrap_or_else(|| ((dim as f64).sqrt() as usize).max(1));
            let params = ForestParams {
                n_trees: h.n_trees,
                bootstrap: h.bootstrap,
                tree: TreeParams { max_features: Some(max_features), ..tree_params },
                seed: spec.seed,
            };
            Classifier::RandomForest(tree::fit_forest(features, &y, &classes, params))
        }
        ClassifierKind::GaussianNb => Classifier::GaussianNb(linear::fit_gaussian_nb(features, &y, &classes)),
        ClassifierKind::LogisticRegression => {
            let params = LogisticParams { learning_rate: h.learning_rate, epochs: h.epochs, l2: h.l2 };
            Classifier::LogisticRegression(linear::fit_logistic(features, &y, &classes, params))
        }
    })
}

pub fn evaluate(
    classifier: &Classifier,
    features: &[Vec<f64>],
    labels: &[i64],
) -> Result<ClassificationReport, SurrogateError> {
    if features.is_empty() {
        return Err(SurrogateError::EmptyTestSet);
    }
    let dim = check(features, labels)?;
    if let Some(expected) = classifier.dim().filter(|&d| d != dim) {
        return Err(SurrogateError::Dimension { expected, found: dim });
    }
    classification_report(labels, &classifier.predict_all(features))
}

/// Stratified 80/20 split with `split_seed`, train on the larger side,
/// score on the held-out side.
pub fn train_and_evaluate(
    spec: &ClassifierSpec,
    features: &[Vec<f64>],
    labels: &[i64],
    split_seed: u64,
) -> Result<ClassificationReport, SurrogateError> {
    check(features, labels)?;
    let (train_idx, test_idx) = stratified_split(labels, TEST_FRACTION, split_seed);
    let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<i64>) {
        (idx.iter().map(|&i| features[i].clone()).collect(), idx.iter().map(|&i| labels[i]).collect())
    };
    let (tx, ty) = pick(&train_idx);
    let (vx, vy) = pick(&test_idx);
    let model = train(spec, &tx, &ty)?;
    evaluate(&model, &vx, &vy)
}
