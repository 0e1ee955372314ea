//! Gaussian naive Bayes and multinomial logistic regression.

use serde::{Deserialize, Serialize};

pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub classes: Vec<i64>,
    pub log_prior: Vec<f64>,
    pub mean: Vec<Vec<f64>>,
    pub var: Vec<Vec<f64>>,
}

pub(crate) fn fit_gaussian_nb(x: &[Vec<f64>], y: &[usize], classes: &[i64]) -> GaussianNb {
    let k = classes.len();
    let dim = x[0].len();
    let mut count = vec![0usize; k];
    let mut mean = vec![vec![0.0; dim]; k];
    for (row, &c) in x.iter().zip(y) {
        count[c] += 1;
        for (m, v) in mean[c].iter_mut().zip(row) {
            *m += v;
        }
    }
    for (m, &n) in mean.iter_mut().zip(&count) {
        m.iter_mut().for_each(|v| *v /= n as f64);
    }
    let mut var = vec![vec![0.0; dim]; k];
    for (row, &c) in x.iter().zip(y) {
        for d in 0..dim {
            var[c][d] += (row[d] - mean[c][d]).powi(2);
        }
    }
    for (v, &n) in var.iter_mut().zip(&count) {
        v.iter_mut().for_each(|s| *s = (*s / n as f64).max(VARIANCE_FLOOR));
    }
    let total = x.len() as f64;
    let log_prior = count.iter().map(|&n| (n as f64 / total).ln()).collect();
    GaussianNb { classes: classes.to_vec(), log_prior, mean, var }
}

impl GaussianNb {
    pub fn log_likelihoods(&self, x: &[f64]) -> Vec<f64> {
        (0..self.classes.len())
            .map(|c| {
                let ll: f64 = x
                    .iter()
                    .zip(&self.mean[c])
                    .zip(&self.var[c])
                    .map(|((v, m), s)| -0.5 * ((2.0 * std::f64::consts::PI * s).ln() + (v - m).powi(2) / s))
                    .sum();
                self.log_prior[c] + ll
            })
            .collect()
    }

    pub fn predict(&self, x: &[f64]) -> i64 {
        self.classes[argmax(&self.log_likelihoods(x))]
    }
}

/// Index of the largest value; the first one on ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub classes: Vec<i64>,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    /// One row per class: bias followed by feature weights.
    pub weights: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LogisticParams {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
}

fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    z.iter_mut().for_each(|v| *v /= sum);
}

/// Full-batch gradient descent on the mean cross-entropy plus an L2 penalty
/// on the non-bias weights, starting from zero.
pub(crate) fn fit_logistic(x: &[Vec<f64>], y: &[usize], classes: &[i64], params: LogisticParams) -> LogisticRegression {
    let n = x.len() as f64;
    let dim = x[0].len();
    let k = classes.len();
    let mut mean = vec![0.0; dim];
    for row in x {
        mean.iter_mut().zip(row).for_each(|(m, v)| *m += v / n);
    }
    let mut scale = vec![0.0; dim];
    for row in x {
        scale.iter_mut().zip(row).zip(&mean).for_each(|((s, v), m)| *s += (v - m).powi(2) / n);
    }
    scale.iter_mut().for_each(|s| *s = if *s > 0.0 { s.sqrt() } else { 1.0 });
    let z: Vec<Vec<f64>> =
        x.iter().map(|row| row.iter().zip(&mean).zip(&scale).map(|((v, m), s)| (v - m) / s).collect()).collect();

    let mut w = vec![vec![0.0; dim + 1]; k];
    let mut grad = vec![vec![0.0; dim + 1]; k];
    let mut p = vec![0.0; k];
    for _ in 0..params.epochs {
        grad.iter_mut().for_each(|g| g.iter_mut().for_each(|v| *v = 0.0));
        for (row, &label) in z.iter().zip(y) {
            for (c, pc) in p.iter_mut().enumerate() {
                *pc = w[c][0] + w[c][1..].iter().zip(row).map(|(a, b)| a * b).sum::<f64>();
            }
            softmax_in_place(&mut p);
            for c in 0..k {
                let err = p[c] - f64::from(u8::from(c == label));
                grad[c][0] += err;
                for d in 0..dim {
                    grad[c][d + 1] += err * row[d];
                }
            }
        }
        for c in 0..k {
            for j in 0..=dim {
                let penalty = if j == 0 { 0.0 } else { params.l2 * w[c][j] };
                w[c][j] -= params.learning_rate * (grad[c][j] / n + penalty);
            }
        }
    }
    LogisticRegression { classes: classes.to_vec(), mean, scale, weights: w }
}

impl LogisticRegression {
    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let z: Vec<f64> = x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect();
        let mut p: Vec<f64> =
            self.weights.iter().map(|w| w[0] + w[1..].iter().zip(&z).map(|(a, b)| a * b).sum::<f64>()).collect();
        softmax_in_place(&mut p);
        p
    }

    pub fn predict(&self, x: &[f64]) -> i64 {
        self.classes[argmax(&self.probabilities(x))]
    }
}
