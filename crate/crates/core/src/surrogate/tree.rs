//! CART with Gini impurity and a bagged forest built from it.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf { class: usize },
    Split { feature: usize, threshold: f64, left: Box<TreeNode>, right: Box<TreeNode> },
}

/// Fitted tree. `classes` maps internal class indices to labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub classes: Vec<i64>,
    pub root: TreeNode,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features examined per split; `None` means all.
    pub max_features: Option<usize>,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    params: TreeParams,
    rng: Option<ChaCha8Rng>,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t).powi(2)).sum::<f64>()
}

fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best
}

struct Candidate {
    score: f64,
    feature: usize,
    position: usize,
    threshold: f64,
}

impl Builder<'_> {
    fn build(&mut self, rows: &mut [usize], depth: usize) -> TreeNode {
        let mut counts = vec![0usize; self.n_classes];
        for &r in rows.iter() {
            counts[self.y[r]] += 1;
        }
        let class = majority(&counts);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_reached || rows.len() < self.params.min_samples_split {
            return TreeNode::Leaf { class };
        }
        let Some(best) = self.best_split(rows, &counts) else {
            return TreeNode::Leaf { class };
        };
        let feature = best.feature;
        rows.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]).then(a.cmp(&b)));
        let (left, right) = rows.split_at_mut(best.position);
        TreeNode::Split {
            feature,
            threshold: best.threshold,
            left: Box::new(self.build(left, depth + 1)),
            right: Box::new(self.build(right, depth + 1)),
        }
    }

    /// Lowest weighted child impurity; ties go to the lower feature index,
    /// then the lower threshold, whatever order features were examined in.
    fn best_split(&mut self, rows: &[usize], counts: &[usize]) -> Option<Candidate> {
        let dim = self.x[rows[0]].len();
        let mut features: Vec<usize> = (0..dim).collect();
        let quota = self.params.max_features.map_or(dim, |m| m.clamp(1, dim));
        if let Some(rng) = self.rng.as_mut() {
            features.shuffle(rng);
        }
        let n = rows.len();
        let mut order = rows.to_vec();
        let mut best: Option<Candidate> = None;
        for (examined, &f) in features.iter().enumerate() {
            // Keep looking past the quota only while no valid split exists.
            if examined >= quota && best.is_some() {
                break;
            }
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]));
            let mut left = vec![0usize; self.n_classes];
            for i in 0..n - 1 {
                left[self.y[order[i]]] += 1;
                let (lo, hi) = (self.x[order[i]][f], self.x[order[i + 1]][f]);
                if lo >= hi {
                    continue;
                }
                let nl = i + 1;
                let nr = n - nl;
                let right_sq: f64 = counts.iter().zip(&left).map(|(c, l)| ((c - l) as f64).powi(2)).sum();
                let right_gini = 1.0 - right_sq / (nr as f64 * nr as f64);
                let score = (nl as f64 * gini(&left, nl) + nr as f64 * right_gini) / n as f64;
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                let better = best
                    .as_ref()
                    .is_none_or(|b| score < b.score || (score == b.score && (f, threshold) < (b.feature, b.threshold)));
                if better {
                    best = Some(Candidate { score, feature: f, position: nl, threshold });
                }
            }
        }
        best
    }
}

impl TreeNode {
    fn predict(&self, x: &[f64]) -> usize {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { class } => return *class,
                TreeNode::Split { feature, threshold, left, right } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

pub(crate) fn fit_tree(
    x: &[Vec<f64>],
    y: &[usize],
    classes: &[i64],
    params: TreeParams,
    rng: Option<ChaCha8Rng>,
) -> DecisionTree {
    let mut rows: Vec<usize> = (0..x.len()).collect();
    let mut builder = Builder { x, y, n_classes: classes.len(), params, rng };
    let root = builder.build(&mut rows, 0);
    DecisionTree { classes: classes.to_vec(), root }
}

impl DecisionTree {
    pub(crate) fn predict_index(&self, x: &[f64]) -> usize {
        self.root.predict(x)
    }

    pub fn predict(&self, x: &[f64]) -> i64 {
        self.classes[self.predict_index(x)]
    }
}

/// Bagged trees with per-split feature subsampling; prediction is a
/// majority vote, ties going to the lowest label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub classes: Vec<i64>,
    pub trees: Vec<DecisionTree>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub tree: TreeParams,
    pub seed: u64,
}

/// Training rows are put in a canonical order first so the bootstrap draws
/// do not depend on how the caller ordered the data.
pub(crate) fn fit_forest(x: &[Vec<f64>], y: &[usize], classes: &[i64], params: ForestParams) -> RandomForest {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| {
        x[a].iter()
            .zip(&x[b])
            .map(|(p, q)| p.total_cmp(q))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(y[a].cmp(&y[b]))
    });
    let cx: Vec<Vec<f64>> = order.iter().map(|&i| x[i].clone()).collect();
    let cy: Vec<usize> = order.iter().map(|&i| y[i]).collect();
    let n = cx.len();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            rng.set_stream(t as u64);
            if params.bootstrap {
                let picks: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let bx: Vec<Vec<f64>> = picks.iter().map(|&i| cx[i].clone()).collect();
                let by: Vec<usize> = picks.iter().map(|&i| cy[i]).collect();
                fit_tree(&bx, &by, classes, params.tree, Some(rng))
            } else {
                fit_tree(&cx, &cy, classes, params.tree, Some(rng))
            }
        })
        .collect();
    RandomForest { classes: classes.to_vec(), trees }
}

impl RandomForest {
    pub fn predict(&self, x: &[f64]) -> i64 {
        let mut votes = vec![0usize; self.classes.len()];
        for tree in &self.trees {
            votes[tree.predict_index(x)] += 1;
        }
        self.classes[majority(&votes)]
    }
}
