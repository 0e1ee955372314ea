use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SurrogateError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: i64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Accuracy plus support-weighted precision, recall and F1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_class: Vec<ClassMetrics>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Scores `predicted` against `truth`. Classes appear in label order and
/// include labels that were only ever predicted (their support is 0).
pub fn classification_report(truth: &[i64], predicted: &[i64]) -> Result<ClassificationReport, SurrogateError> {
    if truth.len() != predicted.len() {
        return Err(SurrogateError::LengthMismatch { rows: truth.len(), labels: predicted.len() });
    }
    if truth.is_empty() {
        return Err(SurrogateError::EmptyTestSet);
    }
    // label -> (true positives, predicted count, support)
    let mut tally: BTreeMap<i64, (usize, usize, usize)> = BTreeMap::new();
    for (&t, &p) in truth.iter().zip(predicted) {
        tally.entry(t).or_default().2 += 1;
        let e = tally.entry(p).or_default();
        e.1 += 1;
        if t == p {
            e.0 += 1;
        }
    }
    let n = truth.len();
    let correct: usize = tally.values().map(|e| e.0).sum();
    let mut report = ClassificationReport {
        accuracy: ratio(correct, n),
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
        per_class: Vec::with_capacity(tally.len()),
    };
    for (&label, &(tp, predicted_count, support)) in &tally {
        let precision = ratio(tp, predicted_count);
        let recall = ratio(tp, support);
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        let w = support as f64 / n as f64;
        report.precision += w * precision;
        report.recall += w * recall;
        report.f1 += w * f1;
        report.per_class.push(ClassMetrics { label, precision, recall, f1, support });
    }
    Ok(report)
}

/// Per-class shuffled split: `round(count * test_fraction)` rows of each
/// class go to the test side. Both index lists come back sorted.
pub fn stratified_split(labels: &[i64], test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut by_class: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for mut members in by_class.into_values() {
        members.shuffle(&mut rng);
        let k = ((members.len() as f64 * test_fraction).round() as usize).min(members.len());
        test.extend_from_slice(&members[..k]);
        train.extend_from_slice(&members[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}
