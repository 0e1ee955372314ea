//! Cluster validity: purity against author labels, Davies-Bouldin index,
//! permutation baselines and per-author-pair comparisons.

use std::collections::{BTreeMap, HashMap};
use std::hash::Hash;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::hdbscan::euclidean;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidityError {
    #[error("length mismatch: {0} labels vs {1} items")]
    LengthMismatch(usize, usize),
    #[error("purity undefined: every point is an outlier")]
    AllOutliers,
    #[error("Davies-Bouldin index needs at least 2 clusters, found {0}")]
    TooFewClusters(usize),
    #[error("degenerate centroids: clusters {0} and {1} coincide")]
    DegenerateCentroids(i64, i64),
    #[error("author {0:?} has no clustered points")]
    AuthorAbsent(String),
    #[error("repeats must be at least 1")]
    NoRepeats,
}

/// Fraction of clustered points that belong to their cluster's majority
/// class. Outliers (label −1) are ignored.
pub fn purity<C: Eq + Hash>(labels: &[i64], classes: &[C]) -> Result<f64, ValidityError> {
    if labels.len() != classes.len() {
        return Err(ValidityError::LengthMismatch(labels.len(), classes.len()));
    }
    let mut counts: BTreeMap<i64, HashMap<&C, usize>> = BTreeMap::new();
    let mut clustered = 0usize;
    for (&l, c) in labels.iter().zip(classes) {
        if l < 0 {
            continue;
        }
        clustered += 1;
        *counts.entry(l).or_default().entry(c).or_default() += 1;
    }
    if clustered == 0 {
        return Err(ValidityError::AllOutliers);
    }
    let majority: usize = counts.values().map(|m| m.values().copied().max().unwrap_or(0)).sum();
    Ok(majority as f64 / clustered as f64)
}

/// Davies-Bouldin index over clustered points.
pub fn davies_bouldin(vectors: &[Vec<f64>], labels: &[i64]) -> Result<f64, ValidityError> {
    if labels.len() != vectors.len() {
        return Err(ValidityError::LengthMismatch(labels.len(), vectors.len()));
    }
    let mut members: BTreeMap<i64, Vec<&[f64]>> = BTreeMap::new();
    for (v, &l) in vectors.iter().zip(labels) {
        if l >= 0 {
            members.entry(l).or_default().push(v);
        }
    }
    if members.len() < 2 {
        return Err(ValidityError::TooFewClusters(members.len()));
    }
    let dim = vectors[0].len();
    let stats: Vec<(i64, Vec<f64>, f64)> = members
        .iter()
        .map(|(&l, pts)| {
            let mut centroid = vec![0.0; dim];
            for p in pts {
                for (c, x) in centroid.iter_mut().zip(p.iter()) {
                    *c += x;
                }
            }
            for c in &mut centroid {
                *c /= pts.len() as f64;
            }
            let spread = pts.iter().map(|p| euclidean(p, &centroid)).sum::<f64>() / pts.len() as f64;
            (l, centroid, spread)
        })
        .collect();
    let mut total = 0.0;
    for (i, (li, ci, si)) in stats.iter().enumerate() {
        let mut worst = 0.0f64;
        for (j, (lj, cj, sj)) in stats.iter().enumerate() {
            if i == j {
                continue;
            }
            let gap = euclidean(ci, cj);
            if gap == 0.0 {
                return Err(ValidityError::DegenerateCentroids(*li.min(lj), *li.max(lj)));
            }
            worst = worst.max((si + sj) / gap);
        }
        total += worst;
    }
    Ok(total / stats.len() as f64)
}

/// Shuffles the labels of clustered points, keeping outliers in place and
/// cluster sizes intact.
fn shuffled_labels(labels: &[i64], rng: &mut ChaCha8Rng) -> Vec<i64> {
    let positions: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] >= 0).collect();
    let mut pool: Vec<i64> = positions.iter().map(|&i| labels[i]).collect();
    pool.shuffle(rng);
    let mut out = labels.to_vec();
    for (&i, l) in positions.iter().zip(pool) {
        out[i] = l;
    }
    out
}

/// Mean purity of `repeats` random relabelings.
pub fn random_baseline<C: Eq + Hash>(
    labels: &[i64],
    classes: &[C],
    repeats: usize,
    seed: u64,
) -> Result<f64, ValidityError> {
    if repeats == 0 {
        return Err(ValidityError::NoRepeats);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for _ in 0..repeats {
        total += purity(&shuffled_labels(labels, &mut rng), classes)?;
    }
    Ok(total / repeats as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub author_a: String,
    pub author_b: String,
    pub n_points: usize,
    pub purity: f64,
    pub baseline_purity: f64,
    pub purity_improve: f64,
    pub dbi: Option<f64>,
    pub baseline_dbi: Option<f64>,
    /// `baseline_dbi - dbi`; positive means tighter than chance.
    pub dbi_improve: Option<f64>,
}

/// Restricts the clustering to the clustered points of two authors and
/// compares it against random relabelings of the same points.
pub fn authorship_pair_report(
    vectors: &[Vec<f64>],
    labels: &[i64],
    authors: &[String],
    pair: (&str, &str),
    repeats: usize,
    seed: u64,
) -> Result<PairReport, ValidityError> {
    if labels.len() != vectors.len() || authors.len() != labels.len() {
        return Err(ValidityError::LengthMismatch(labels.len(), vectors.len().min(authors.len())));
    }
    if repeats == 0 {
        return Err(ValidityError::NoRepeats);
    }
    let keep: Vec<usize> =
        (0..labels.len()).filter(|&i| labels[i] >= 0 && (authors[i] == pair.0 || authors[i] == pair.1)).collect();
    for author in [pair.0, pair.1] {
        if !keep.iter().any(|&i| authors[i] == author) {
            return Err(ValidityError::AuthorAbsent(author.to_string()));
        }
    }
    let sub_vectors: Vec<Vec<f64>> = keep.iter().map(|&i| vectors[i].clone()).collect();
    let sub_labels: Vec<i64> = keep.iter().map(|&i| labels[i]).collect();
    let sub_authors: Vec<&str> = keep.iter().map(|&i| authors[i].as_str()).collect();

    let purity_value = purity(&sub_labels, &sub_authors)?;
    let dbi = davies_bouldin(&sub_vectors, &sub_labels).ok();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut purity_sum = 0.0;
    let (mut dbi_sum, mut dbi_n) = (0.0, 0usize);
    for _ in 0..repeats {
        let shuffled = shuffled_labels(&sub_labels, &mut rng);
        purity_sum += purity(&shuffled, &sub_authors)?;
        if let Ok(d) = davies_bouldin(&sub_vectors, &shuffled) {
            dbi_sum += d;
            dbi_n += 1;
        }
    }
    let baseline_purity = purity_sum / repeats as f64;
    let baseline_dbi = (dbi_n > 0).then(|| dbi_sum / dbi_n as f64);
    Ok(PairReport {
        author_a: pair.0.to_string(),
        author_b: pair.1.to_string(),
        n_points: keep.len(),
        purity: purity_value,
        baseline_purity,
        purity_improve: purity_value - baseline_purity,
        dbi,
        baseline_dbi,
        dbi_improve: baseline_dbi.zip(dbi).map(|(b, d)| b - d),
    })
}
