//! Hierarchical density clustering of style vectors and its validity battery.

mod hdbscan;
mod validity;

use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use hdbscan::Merge;
pub use validity::{authorship_pair_report, davies_bouldin, purity, random_baseline, PairReport, ValidityError};

use hdbscan::{euclidean, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClusterParams {
    pub min_cluster_size: usize,
    pub min_samples: usize,
    pub cluster_selection_epsilon: f64,
    pub standardize: bool,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self { min_cluster_size: 10, min_samples: 5, cluster_selection_epsilon: 0.0, standardize: true }
    }
}

impl ClusterParams {
    pub fn new(min_cluster_size: usize, min_samples: usize, epsilon: f64) -> Self {
        Self { min_cluster_size, min_samples, cluster_selection_epsilon: epsilon, ..Self::default() }
    }

    fn validate(&self) -> Result<(), ClusterError> {
        if self.min_cluster_size < 2 {
            return Err(ClusterError::Params("min_cluster_size must be at least 2".into()));
        }
        if self.min_samples < 1 {
            return Err(ClusterError::Params("min_samples must be at least 1".into()));
        }
        if !self.cluster_selection_epsilon.is_finite() || self.cluster_selection_epsilon < 0.0 {
            return Err(ClusterError::Params("epsilon must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Per-dimension mean and standard deviation used to standardize inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl FeatureStats {
    fn identity(dim: usize) -> Self {
        Self { mean: vec![0.0; dim], std: vec![1.0; dim] }
    }

    /// Column sums run over sorted values so the result does not depend on
    /// row order.
    fn fit(rows: &[Vec<f64>], dim: usize) -> Self {
        let n = rows.len().max(1) as f64;
        let mut mean = Vec::with_capacity(dim);
        let mut std = Vec::with_capacity(dim);
        let mut column = Vec::with_capacity(rows.len());
        for d in 0..dim {
            column.clear();
            column.extend(rows.iter().map(|r| r[d]));
            column.sort_by(f64::total_cmp);
            let m = column.iter().sum::<f64>() / n;
            let mut dev: Vec<f64> = column.iter().map(|x| (x - m) * (x - m)).collect();
            dev.sort_by(f64::total_cmp);
            let s = (dev.iter().sum::<f64>() / n).sqrt();
            mean.push(m);
            std.push(if s > 0.0 { s } else { 1.0 });
        }
        Self { mean, std }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.std).map(|((x, m), s)| (x - m) / s).collect()
    }
}

/// A fitted clustering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub params: ClusterParams,
    pub feature_stats: FeatureStats,
    pub labels: Vec<i64>,
    pub n_clusters: usize,
    /// Point ids of each cluster's exemplars.
    pub exemplars: Vec<Vec<usize>>,
    /// Standardized coordinates of the exemplars, parallel to `exemplars`.
    pub exemplar_vectors: Vec<Vec<Vec<f64>>>,
    /// Per-cluster acceptance radius used by [`predict`].
    pub radii: Vec<f64>,
    pub hierarchy: Vec<Merge>,
}

impl ClusterModel {
    pub fn n_outliers(&self) -> usize {
        self.labels.iter().filter(|&&l| l < 0).count()
    }

    pub fn dim(&self) -> usize {
        self.feature_stats.mean.len()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClusterError {
    #[error("no points to cluster")]
    Empty,
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid parameters: {0}")]
    Params(String),
}

fn check_rows(vectors: &[Vec<f64>]) -> Result<usize, ClusterError> {
    let dim = vectors.first().ok_or(ClusterError::Empty)?.len();
    for (row, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(ClusterError::Dimension { expected: dim, found: v.len() });
        }
        if let Some(col) = v.iter().position(|x| !x.is_finite()) {
            return Err(ClusterError::NonFinite { row, col });
        }
    }
    Ok(dim)
}

/// Fits the density hierarchy and selects flat clusters.
///
/// Fewer points than `min_cluster_size` is not an error: every point is
/// then labeled −1.
pub fn fit_hdbscan(vectors: &[Vec<f64>], params: &ClusterParams) -> Result<ClusterModel, ClusterError> {
    params.validate()?;
    let dim = check_rows(vectors)?;
    let n = vectors.len();
    let stats = if params.standardize { FeatureStats::fit(vectors, dim) } else { FeatureStats::identity(dim) };
    let m = Matrix { data: vectors.iter().flat_map(|v| stats.apply(v)).collect(), dim };

    let mut model = ClusterModel {
        params: *params,
        feature_stats: stats,
        labels: vec![-1; n],
        n_clusters: 0,
        exemplars: Vec::new(),
        exemplar_vectors: Vec::new(),
        radii: Vec::new(),
        hierarchy: Vec::new(),
    };
    if n < 2 {
        return Ok(model);
    }
    let core = hdbscan::core_distances(&m, params.min_samples);
    let edges = hdbscan::minimum_spanning_tree(&m, &core);
    model.hierarchy = hdbscan::single_linkage(n, &edges);
    if n < params.min_cluster_size {
        return Ok(model);
    }
    let tree = hdbscan::condense(&model.hierarchy, n, params.min_cluster_size);
    let chosen = hdbscan::select_clusters(&tree, params.cluster_selection_epsilon);
    model.labels = hdbscan::label_points(&tree, &chosen, n);
    model.n_clusters = chosen.len();
    model.exemplars = hdbscan::exemplars(&tree, &chosen);
    model.exemplar_vectors =
        model.exemplars.iter().map(|ids| ids.iter().map(|&i| m.row(i).to_vec()).collect()).collect();
    model.radii = vec![0.0; chosen.len()];
    for (i, &label) in model.labels.iter().enumerate() {
        if label < 0 {
            continue;
        }
        let c = label as usize;
        let nearest = nearest_distance(&model.exemplar_vectors[c], m.row(i));
        model.radii[c] = model.radii[c].max(core[i].max(nearest));
    }
    Ok(model)
}

fn nearest_distance(points: &[Vec<f64>], probe: &[f64]) -> f64 {
    points.iter().map(|p| euclidean(p, probe)).fold(f64::INFINITY, f64::min)
}

/// Label of the nearest exemplar among clusters whose radius covers the
/// probe; −1 when none does.
pub fn predict(model: &ClusterModel, vector: &[f64]) -> Result<i64, ClusterError> {
    if vector.len() != model.dim() {
        return Err(ClusterError::Dimension { expected: model.dim(), found: vector.len() });
    }
    if let Some(col) = vector.iter().position(|x| !x.is_finite()) {
        return Err(ClusterError::NonFinite { row: 0, col });
    }
    let probe = model.feature_stats.apply(vector);
    let mut best: Option<(f64, i64)> = None;
    for (c, exemplars) in model.exemplar_vectors.iter().enumerate() {
        let d = nearest_distance(exemplars, &probe);
        if d <= model.radii[c] && best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, c as i64));
        }
    }
    Ok(best.map_or(-1, |(_, c)| c))
}

/// Cluster-quality summary against reference classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub n_clusters: usize,
    pub n_clustered: usize,
    pub n_outliers: usize,
    pub purity: Option<f64>,
    pub baseline_purity: Option<f64>,
    pub dbi: Option<f64>,
}

pub fn validity_report<C: Eq + Hash>(
    vectors: &[Vec<f64>],
    labels: &[i64],
    classes: &[C],
    repeats: usize,
    seed: u64,
) -> Result<ValidityReport, ValidityError> {
    if labels.len() != classes.len() || labels.len() != vectors.len() {
        return Err(ValidityError::LengthMismatch(labels.len(), classes.len().min(vectors.len())));
    }
    let n_outliers = labels.iter().filter(|&&l| l < 0).count();
    let mut distinct: Vec<i64> = labels.iter().copied().filter(|&l| l >= 0).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let pure = match purity(labels, classes) {
        Ok(p) => Some(p),
        Err(ValidityError::AllOutliers) => None,
        Err(e) => return Err(e),
    };
    let baseline = match pure {
        Some(_) => Some(random_baseline(labels, classes, repeats, seed)?),
        None => None,
    };
    Ok(ValidityReport {
        n_clusters: distinct.len(),
        n_clustered: labels.len() - n_outliers,
        n_outliers,
        purity: pure,
        baseline_purity: baseline,
        dbi: davies_bouldin(vectors, labels).ok(),
    })
}

/// One row of a hyperparameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub min_cluster_size: usize,
    pub min_samples: usize,
    pub epsilon: f64,
    pub n_clusters: usize,
    pub n_outliers: usize,
    pub purity: Option<f64>,
    pub baseline_purity: Option<f64>,
    pub dbi: Option<f64>,
}

pub fn sweep<C: Eq + Hash>(
    vectors: &[Vec<f64>],
    classes: &[C],
    grid: &[ClusterParams],
    repeats: usize,
    seed: u64,
) -> Result<Vec<SweepRow>, SweepError> {
    grid.iter()
        .map(|params| {
            let model = fit_hdbscan(vectors, params)?;
            let scaled: Vec<Vec<f64>> = vectors.iter().map(|v| model.feature_stats.apply(v)).collect();
            let report = validity_report(&scaled, &model.labels, classes, repeats, seed)?;
            Ok(SweepRow {
                min_cluster_size: params.min_cluster_size,
                min_samples: params.min_samples,
                epsilon: params.cluster_selection_epsilon,
                n_clusters: report.n_clusters,
                n_outliers: report.n_outliers,
                purity: report.purity,
                baseline_purity: report.baseline_purity,
                dbi: report.dbi,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Validity(#[from] ValidityError),
}
