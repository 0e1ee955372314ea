//! Density clustering over mutual reachability distances.
//!
//! Dense O(n²) construction: core distances, Prim's MST, single-linkage
//! merges, condensed tree, excess-of-mass selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Row-major point matrix.
#[derive(Debug, Clone)]
pub(crate) struct Matrix {
    pub data: Vec<f64>,
    pub dim: usize,
}

impl Matrix {
    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Distance from each point to its `k`-th nearest neighbour, the point
/// itself counting as the first.
pub(crate) fn core_distances(m: &Matrix, k: usize) -> Vec<f64> {
    let n = m.len();
    let k = k.clamp(1, n);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut d: Vec<f64> = (0..n).map(|j| euclidean(m.row(i), m.row(j))).collect();
            let (_, kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
            *kth
        })
        .collect()
}

fn mutual_reachability(m: &Matrix, core: &[f64], i: usize, j: usize) -> f64 {
    euclidean(m.row(i), m.row(j)).max(core[i]).max(core[j])
}

/// Prim's algorithm on the implicit complete graph. Returns `n - 1` edges
/// sorted by weight, then by endpoint indices.
pub(crate) fn minimum_spanning_tree(m: &Matrix, core: &[f64]) -> Vec<(usize, usize, f64)> {
    let n = m.len();
    let mut in_tree = vec![false; n];
    let mut key = vec![f64::INFINITY; n];
    let mut parent = vec![0usize; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    if n == 0 {
        return edges;
    }
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        key.par_iter_mut().zip(parent.par_iter_mut()).enumerate().filter(|(v, _)| !in_tree[*v]).for_each(
            |(v, (k, p))| {
                let w = mutual_reachability(m, core, current, v);
                if w < *k {
                    *k = w;
                    *p = current;
                }
            },
        );
        let next = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| key[a].total_cmp(&key[b]).then(a.cmp(&b)))
            .expect("a vertex remains");
        let (a, b) = (parent[next].min(next), parent[next].max(next));
        edges.push((a, b, key[next]));
        in_tree[next] = true;
        current = next;
    }
    edges.sort_by(|x, y| x.2.total_cmp(&y.2).then(x.0.cmp(&y.0)).then(x.1.cmp(&y.1)));
    edges
}

/// One agglomeration step. Node ids below `n` are points; merge `i` creates
/// node `n + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

pub(crate) fn single_linkage(n: usize, sorted_edges: &[(usize, usize, f64)]) -> Vec<Merge> {
    let mut parent: Vec<usize> = (0..2 * n).collect();
    let mut size = vec![1usize; 2 * n];
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut merges = Vec::with_capacity(sorted_edges.len());
    for (i, &(a, b, w)) in sorted_edges.iter().enumerate() {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        let node = n + i;
        parent[ra] = node;
        parent[rb] = node;
        size[node] = size[ra] + size[rb];
        merges.push(Merge { left: ra.min(rb), right: ra.max(rb), distance: w, size: size[node] });
    }
    merges
}

/// Stability value that tolerates points leaving at infinite density
/// (zero distance): `infinite` counts such points, `finite` sums the rest.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Stability {
    pub infinite: u64,
    pub finite: f64,
}

impl Stability {
    fn add(&mut self, lambda: f64, birth: f64, size: usize) {
        if lambda.is_infinite() {
            if birth.is_finite() {
                self.infinite += size as u64;
            }
        } else {
            self.finite += (lambda - birth) * size as f64;
        }
    }

    fn plus(self, other: Stability) -> Stability {
        Stability { infinite: self.infinite + other.infinite, finite: self.finite + other.finite }
    }

    fn exceeds(&self, other: &Stability) -> bool {
        self.infinite > other.infinite || (self.infinite == other.infinite && self.finite > other.finite)
    }
}

fn lambda_of(distance: f64) -> f64 {
    if distance > 0.0 {
        1.0 / distance
    } else {
        f64::INFINITY
    }
}

/// Condensed tree. Cluster 0 is the root; children always have larger ids.
#[derive(Debug, Clone, Default)]
pub(crate) struct CondensedTree {
    pub parent: Vec<Option<usize>>,
    pub birth: Vec<f64>,
    pub children: Vec<Vec<usize>>,
    /// (cluster, point, lambda at which the point leaves the cluster)
    pub points: Vec<(usize, usize, f64)>,
    /// (parent, child cluster, lambda, child size)
    pub splits: Vec<(usize, usize, f64, usize)>,
}

fn subtree_points(merges: &[Merge], n: usize, node: usize, out: &mut Vec<usize>) {
    let mut stack = vec![node];
    while let Some(x) = stack.pop() {
        if x < n {
            out.push(x);
        } else {
            let m = &merges[x - n];
            stack.push(m.right);
            stack.push(m.left);
        }
    }
}

/// Components joined at the height of `node`: merges at exactly the same
/// distance are flattened into one multi-way split, so the result does not
/// depend on how ties were ordered.
fn level_children(merges: &[Merge], n: usize, node: usize) -> Vec<usize> {
    let height = merges[node - n].distance;
    let mut out = Vec::new();
    let mut stack = vec![merges[node - n].right, merges[node - n].left];
    while let Some(x) = stack.pop() {
        if x >= n && merges[x - n].distance == height {
            stack.push(merges[x - n].right);
            stack.push(merges[x - n].left);
        } else {
            out.push(x);
        }
    }
    out
}

/// Prunes the merge tree: components smaller than `min_cluster_size` become
/// points falling out of their parent. Splits at zero distance never create
/// clusters, since the points involved are indistinguishable.
pub(crate) fn condense(merges: &[Merge], n: usize, min_cluster_size: usize) -> CondensedTree {
    let mut tree =
        CondensedTree { parent: vec![None], birth: vec![0.0], children: vec![Vec::new()], ..Default::default() };
    let size_of = |node: usize| if node < n { 1 } else { merges[node - n].size };
    let mut queue = std::collections::VecDeque::new();
    queue.push_back((2 * n - 2, 0usize));
    let mut scratch = Vec::new();
    while let Some((node, cluster)) = queue.pop_front() {
        if node < n {
            tree.points.push((cluster, node, tree.birth[cluster]));
            continue;
        }
        let lambda = lambda_of(merges[node - n].distance);
        let parts = level_children(merges, n, node);
        let big =
            if lambda.is_finite() { parts.iter().filter(|&&p| size_of(p) >= min_cluster_size).count() } else { 0 };
        for part in parts {
            let size = size_of(part);
            if big >= 2 && size >= min_cluster_size {
                let id = tree.parent.len();
                tree.parent.push(Some(cluster));
                tree.birth.push(lambda);
                tree.children.push(Vec::new());
                tree.children[cluster].push(id);
                tree.splits.push((cluster, id, lambda, size));
                queue.push_back((part, id));
            } else if big == 1 && size >= min_cluster_size {
                queue.push_back((part, cluster));
            } else {
                scratch.clear();
                subtree_points(merges, n, part, &mut scratch);
                for &p in &scratch {
                    tree.points.push((cluster, p, lambda));
                }
            }
        }
    }
    tree
}

pub(crate) fn stabilities(tree: &CondensedTree) -> Vec<Stability> {
    let mut s = vec![Stability::default(); tree.parent.len()];
    for &(c, _, lambda) in &tree.points {
        s[c].add(lambda, tree.birth[c], 1);
    }
    for &(c, _, lambda, size) in &tree.splits {
        s[c].add(lambda, tree.birth[c], size);
    }
    s
}

fn descendants(tree: &CondensedTree, c: usize, out: &mut Vec<usize>) {
    for &child in &tree.children[c] {
        out.push(child);
        descendants(tree, child, out);
    }
}

/// Excess-of-mass selection followed by the epsilon merge rule. Returns the
/// selected cluster ids in ascending order.
pub(crate) fn select_clusters(tree: &CondensedTree, epsilon: f64) -> Vec<usize> {
    let k = tree.parent.len();
    let stability = stabilities(tree);
    let mut selected = vec![false; k];
    let mut best = vec![Stability::default(); k];
    let mut scratch = Vec::new();
    for c in (0..k).rev() {
        if tree.children[c].is_empty() {
            selected[c] = true;
            best[c] = stability[c];
            continue;
        }
        if c == 0 {
            continue;
        }
        let sub = tree.children[c].iter().fold(Stability::default(), |acc, &ch| acc.plus(best[ch]));
        if stability[c].exceeds(&sub) {
            selected[c] = true;
            best[c] = stability[c];
            scratch.clear();
            descendants(tree, c, &mut scratch);
            for &d in &scratch {
                selected[d] = false;
            }
        } else {
            best[c] = sub;
        }
    }
    let mut chosen: Vec<usize> = (0..k).filter(|&c| selected[c]).collect();
    if epsilon > 0.0 && !(chosen.len() == 1 && chosen[0] == 0) {
        let birth_distance = |c: usize| 1.0 / tree.birth[c];
        let mut targets: Vec<usize> = chosen
            .iter()
            .map(|&c| {
                if birth_distance(c) >= epsilon {
                    return c;
                }
                let mut cur = c;
                loop {
                    let p = tree.parent[cur].expect("non-root has a parent");
                    if p == 0 {
                        return cur;
                    }
                    if birth_distance(p) > epsilon {
                        return p;
                    }
                    cur = p;
                }
            })
            .collect();
        targets.sort_unstable();
        targets.dedup();
        let is_ancestor = |a: usize, mut b: usize| {
            while let Some(p) = tree.parent[b] {
                if p == a {
                    return true;
                }
                b = p;
            }
            false
        };
        chosen = targets.iter().copied().filter(|&t| !targets.iter().any(|&o| o != t && is_ancestor(o, t))).collect();
    }
    chosen
}

/// Point labels (−1 for outliers) given the selected clusters.
pub(crate) fn label_points(tree: &CondensedTree, chosen: &[usize], n: usize) -> Vec<i64> {
    let k = tree.parent.len();
    let mut cluster_label = vec![-1i64; k];
    for (label, &c) in chosen.iter().enumerate() {
        cluster_label[c] = label as i64;
    }
    for c in 1..k {
        if cluster_label[c] < 0 {
            cluster_label[c] = cluster_label[tree.parent[c].expect("non-root")];
        }
    }
    let mut labels = vec![-1i64; n];
    for &(c, p, _) in &tree.points {
        labels[p] = cluster_label[c];
    }
    labels
}

/// Points of maximal density in each leaf cluster under a selected cluster.
pub(crate) fn exemplars(tree: &CondensedTree, chosen: &[usize]) -> Vec<Vec<usize>> {
    let k = tree.parent.len();
    let mut own: Vec<Vec<(usize, f64)>> = vec![Vec::new(); k];
    for &(c, p, lambda) in &tree.points {
        own[c].push((p, lambda));
    }
    chosen
        .iter()
        .map(|&c| {
            let mut leaves = vec![c];
            descendants(tree, c, &mut leaves);
            leaves.retain(|&l| tree.children[l].is_empty());
            let mut ids = Vec::new();
            for leaf in leaves {
                let top = own[leaf].iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
                ids.extend(own[leaf].iter().filter(|x| x.1 == top).map(|x| x.0));
            }
            ids.sort_unstable();
            ids
        })
        .collect()
}
