//! CART regression trees.

use alloc::boxed::Box;
use alloc::vec::Vec;
use rand::Rng as _;

use super::{Matrix, MlError};
use crate::rng::Rng;

/// Split-quality criterion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    SquaredError,
    /// Friedman's improvement score `nL * nR / n * (meanL - meanR)^2`.
    FriedmanMse,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::SquaredError => "squared_error",
            Criterion::FriedmanMse => "friedman_mse",
        }
    }

    /// Score of a candidate split; larger is better. For squared error this
    /// is the impurity proxy `sumL^2/nL + sumR^2/nR`.
    fn score(self, n_left: f64, sum_left: f64, n_right: f64, sum_right: f64) -> f64 {
        match self {
            Criterion::SquaredError => sum_left * sum_left / n_left + sum_right * sum_right / n_right,
            Criterion::FriedmanMse => {
                let diff = sum_left / n_left - sum_right / n_right;
                n_left * n_right / (n_left + n_right) * diff * diff
            }
        }
    }
}

/// Number of candidate features examined per split.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Log2,
    Sqrt,
    #[default]
    #[serde(alias = "none")]
    All,
}

impl MaxFeatures {
    pub fn name(self) -> &'static str {
        match self {
            MaxFeatures::Log2 => "log2",
            MaxFeatures::Sqrt => "sqrt",
            MaxFeatures::All => "all",
        }
    }

    pub fn count(self, p: usize) -> usize {
        let k = match self {
            MaxFeatures::Log2 => libm::floor(libm::log2(p as f64)) as usize,
            MaxFeatures::Sqrt => libm::floor(libm::sqrt(p as f64)) as usize,
            MaxFeatures::All => p,
        };
        k.clamp(1, p.max(1))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub max_features: MaxFeatures,
    pub max_leaf_nodes: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub criterion: Criterion,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            max_features: MaxFeatures::All,
            max_leaf_nodes: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            criterion: Criterion::SquaredError,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Split {
    pub feature: usize,
    /// Rows with `x[feature] <= threshold` go left.
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Node {
    pub value: f64,
    /// Number of training rows (counting bootstrap duplicates) reaching the node.
    pub cover: f64,
    pub impurity: f64,
    pub split: Option<Split>,
}

/// A fitted tree stored as an arena; node 0 is the root.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
    pub n_features: usize,
    pub criterion: Criterion,
}

/// Nested form of a tree, used for model documents.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TreeNode {
    pub value: f64,
    pub cover: f64,
    pub impurity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<NestedSplit>,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NestedSplit {
    pub feature: usize,
    pub threshold: f64,
    pub left: Box<TreeNode>,
    pub right: Box<TreeNode>,
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: f64,
    gain: f64,
}

struct Frontier {
    node: usize,
    depth: usize,
    rows: Vec<usize>,
    best: Candidate,
}

fn node_stats(y: &[f64], rows: &[usize]) -> (f64, f64) {
    let n = rows.len() as f64;
    let mean = rows.iter().map(|&i| y[i]).sum::<f64>() / n;
    let var = rows.iter().map(|&i| (y[i] - mean) * (y[i] - mean)).sum::<f64>() / n;
    (mean, var)
}

fn find_split(
    x: &Matrix,
    y: &[f64],
    rows: &[usize],
    depth: usize,
    params: &TreeParams,
    rng: &mut Rng,
) -> Option<Candidate> {
    let n = rows.len();
    if params.max_depth.is_some_and(|d| depth >= d)
        || n < params.min_samples_split.max(2)
        || n < 2 * params.min_samples_leaf.max(1)
        || rows.iter().all(|&i| y[i] == y[rows[0]])
    {
        return None;
    }
    let p = x.cols();
    let k = params.max_features.count(p);
    let min_leaf = params.min_samples_leaf.max(1);
    let total: f64 = rows.iter().map(|&i| y[i]).sum();
    let mut features: Vec<usize> = (0..p).collect();
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
    let mut best: Option<Candidate> = None;
    let mut examined = 0;
    let mut drawn = 0;
    // Draw features without replacement until `k` non-constant ones have
    // been examined or none remain.
    while drawn < p && examined < k {
        let j = rng.gen_range(drawn..p);
        features.swap(drawn, j);
        let f = features[drawn];
        drawn += 1;
        pairs.clear();
        pairs.extend(rows.iter().map(|&i| (x.get(i, f), y[i])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs[0].0 == pairs[n - 1].0 {
            continue;
        }
        examined += 1;
        let mut sum_left = 0.0;
        for i in 0..n - 1 {
            sum_left += pairs[i].1;
            let n_left = i + 1;
            if pairs[i].0 == pairs[i + 1].0 || n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            let (nl, nr) = (n_left as f64, (n - n_left) as f64);
            let sum_right = total - sum_left;
            let score = params.criterion.score(nl, sum_left, nr, sum_right);
            let better = match &best {
                None => true,
                Some(b) => score > b.score || (score == b.score && f < b.feature),
            };
            if better {
                let (lo, hi) = (pairs[i].0, pairs[i + 1].0);
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                let diff = sum_left / nl - sum_right / nr;
                let gain = nl * nr / (nl + nr) * diff * diff;
                best = Some(Candidate { feature: f, threshold, score, gain });
            }
        }
    }
    best
}

/// Fits a tree on `rows` of `x` (duplicates allowed, as produced by
/// bootstrap sampling). When `max_leaf_nodes` is set nodes are expanded
/// best-first by impurity decrease; otherwise every splittable node is
/// expanded. A constant target yields a single leaf.
pub fn fit_tree(
    x: &Matrix,
    y: &[f64],
    rows: &[usize],
    params: &TreeParams,
    rng: &mut Rng,
) -> Result<RegressionTree, MlError> {
    if rows.len() < 2 {
        return Err(MlError::TooFewRows { rows: rows.len(), needed: 2 });
    }
    if y.len() != x.rows() {
        return Err(MlError::ShapeMismatch { expected: x.rows(), found: y.len() });
    }
    if x.cols() == 0 {
        return Err(MlError::NoFeatures);
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(MlError::NonFinite);
    }
    let (value, impurity) = node_stats(y, rows);
    let mut nodes = alloc::vec![Node { value, cover: rows.len() as f64, impurity, split: None }];
    let mut frontier: Vec<Frontier> = Vec::new();
    if let Some(best) = find_split(x, y, rows, 0, params, rng) {
        frontier.push(Frontier { node: 0, depth: 0, rows: rows.to_vec(), best });
    }
    let mut leaves = 1;
    while !frontier.is_empty() {
        if params.max_leaf_nodes.is_some_and(|m| leaves >= m) {
            break;
        }
        let mut pick = 0;
        for (i, f) in frontier.iter().enumerate() {
            let b = &frontier[pick];
            if f.best.gain > b.best.gain || (f.best.gain == b.best.gain && f.node < b.node) {
                pick = i;
            }
        }
        let Frontier { node, depth, rows, best } = frontier.swap_remove(pick);
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| x.get(i, best.feature) <= best.threshold);
        let mut children = [0usize; 2];
        for (slot, part) in [left_rows, right_rows].into_iter().enumerate() {
            let (value, impurity) = node_stats(y, &part);
            let id = nodes.len();
            nodes.push(Node { value, cover: part.len() as f64, impurity, split: None });
            children[slot] = id;
            if let Some(c) = find_split(x, y, &part, depth + 1, params, rng) {
                frontier.push(Frontier { node: id, depth: depth + 1, rows: part, best: c });
            }
        }
        nodes[node].split =
            Some(Split { feature: best.feature, threshold: best.threshold, left: children[0], right: children[1] });
        leaves += 1;
    }
    Ok(RegressionTree { nodes, n_features: x.cols(), criterion: params.criterion })
}

impl RegressionTree {
    /// Single-leaf tree.
    pub fn constant(value: f64, cover: f64, n_features: usize) -> RegressionTree {
        RegressionTree {
            nodes: alloc::vec![Node { value, cover, impurity: 0.0, split: None }],
            n_features,
            criterion: Criterion::default(),
        }
    }

    /// Index of the leaf reached by `x`.
    pub fn apply(&self, x: &[f64]) -> usize {
        let mut i = 0;
        while let Some(s) = &self.nodes[i].split {
            i = if x[s.feature] <= s.threshold { s.left } else { s.right };
        }
        i
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.nodes[self.apply(x)].value
    }

    /// Cover-weighted mean of leaf values.
    pub fn expected_value(&self) -> f64 {
        let total = self.nodes[0].cover;
        self.leaves().map(|i| self.nodes[i].value * self.nodes[i].cover).sum::<f64>() / total
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].split.is_none())
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves().count()
    }

    /// Length of the longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        fn go(t: &RegressionTree, i: usize) -> usize {
            match &t.nodes[i].split {
                None => 0,
                Some(s) => 1 + go(t, s.left).max(go(t, s.right)),
            }
        }
        go(self, 0)
    }

    /// Features used by at least one split.
    pub fn used_features(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| n.split.map(|s| s.feature))
    }

    pub fn to_nested(&self) -> TreeNode {
        fn go(t: &RegressionTree, i: usize) -> TreeNode {
            let n = &t.nodes[i];
            TreeNode {
                value: n.value,
                cover: n.cover,
                impurity: n.impurity,
                split: n.split.map(|s| NestedSplit {
                    feature: s.feature,
                    threshold: s.threshold,
                    left: Box::new(go(t, s.left)),
                    right: Box::new(go(t, s.right)),
                }),
            }
        }
        go(self, 0)
    }

    pub fn from_nested(root: &TreeNode, n_features: usize, criterion: Criterion) -> RegressionTree {
        fn go(n: &TreeNode, nodes: &mut Vec<Node>) -> usize {
            let id = nodes.len();
            nodes.push(Node { value: n.value, cover: n.cover, impurity: n.impurity, split: None });
            if let Some(s) = &n.split {
                let left = go(&s.left, nodes);
                let right = go(&s.right, nodes);
                nodes[id].split = Some(Split { feature: s.feature, threshold: s.threshold, left, right });
            }
            id
        }
        let mut nodes = Vec::new();
        go(root, &mut nodes);
        RegressionTree { nodes, n_features, criterion }
    }
}
