use std::collections::HashMap;
use std::hash::Hash;

pub const MAX_ORDER: usize = 4;
/// Stand-in for a zero clipped count so that one missing order does not
/// zero the geometric mean.
pub const SMOOTHING: f64 = 1e-9;

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Weighted clipped matches and weighted candidate total for order `n`.
pub fn clipped_counts<T: Eq + Hash>(
    candidate: &[T],
    references: &[&[T]],
    n: usize,
    weight: &dyn Fn(&[T]) -> usize,
) -> (usize, usize) {
    let mut max_ref: HashMap<&[T], usize> = HashMap::new();
    for r in references {
        for (gram, c) in ngram_counts(r, n) {
            let slot = max_ref.entry(gram).or_insert(0);
            *slot = (*slot).max(c);
        }
    }
    let mut matched = 0;
    let mut total = 0;
    for (gram, c) in ngram_counts(candidate, n) {
        let w = weight(gram);
        matched += w * c.min(max_ref.get(gram).copied().unwrap_or(0));
        total += w * c;
    }
    (matched, total)
}

/// Clipped `n`-gram precision without smoothing.
pub fn ngram_precision<T: Eq + Hash>(candidate: &[T], references: &[&[T]], n: usize) -> f64 {
    let (matched, total) = clipped_counts(candidate, references, n, &|_| 1);
    if total == 0 {
        0.0
    } else {
        matched as f64 / total as f64
    }
}

/// Length of the reference closest to `c`, the shorter one on ties.
fn closest_ref_len<T>(c: usize, references: &[&[T]]) -> usize {
    references.iter().map(|r| r.len()).min_by_key(|&r| (r.abs_diff(c), r)).unwrap_or(0)
}

/// BLEU-4 where each n-gram counts `weight(gram)` times. Orders that
/// neither the candidate nor any reference is long enough to contain are
/// left out of the mean.
pub fn weighted_bleu<T: Eq + Hash>(candidate: &[T], references: &[&[T]], weight: &dyn Fn(&[T]) -> usize) -> f64 {
    if candidate.is_empty() || references.iter().all(|r| r.is_empty()) {
        return 0.0;
    }
    let longest_ref = references.iter().map(|r| r.len()).max().unwrap_or(0);
    let mut log_sum = 0.0;
    let mut orders = 0;
    for n in 1..=MAX_ORDER {
        if candidate.len() < n && longest_ref < n {
            continue;
        }
        let (matched, total) = clipped_counts(candidate, references, n, weight);
        let p = if matched == 0 { SMOOTHING } else { matched as f64 / total as f64 };
        log_sum += p.ln();
        orders += 1;
    }
    let c = candidate.len();
    let r = closest_ref_len(c, references);
    let brevity = if c < r { (1.0 - r as f64 / c as f64).exp() } else { 1.0 };
    (brevity * (log_sum / orders as f64).exp()).clamp(0.0, 1.0)
}

pub fn bleu<T: Eq + Hash>(candidate: &[T], references: &[&[T]]) -> f64 {
    weighted_bleu(candidate, references, &|_| 1)
}
