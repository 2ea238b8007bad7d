//! CART-style binary classification tree with per-node random feature subsets.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::dataset::{Dataset, Label};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Candidate features drawn per node; `None` means `⌊log2 F⌋ + 1`.
    pub features_per_split: Option<usize>,
    pub min_leaf: usize,
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            features_per_split: None,
            min_leaf: 1,
            max_depth: None,
        }
    }
}

impl TreeParams {
    pub fn features_for(&self, n_features: usize) -> usize {
        let default = (n_features.max(1) as f64).log2().floor() as usize + 1;
        self.features_per_split
            .unwrap_or(default)
            .clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Class mass reaching the leaf during training (weighted when class weights are used).
    Leaf { p: f64, np: f64, count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    nodes: Vec<Node>,
    n_features: usize,
}

impl TreeModel {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    #[cfg(test)]
    pub(crate) fn nodes_mut(&mut self) -> &mut Vec<Node> {
        &mut self.nodes
    }

    pub fn leaf_for(&self, x: &[f64]) -> &Node {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
                leaf => return leaf,
            }
        }
    }

    /// P-frequency of the leaf reached by `x`.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        match self.leaf_for(x) {
            Node::Leaf { p, np, .. } if p + np > 0.0 => p / (p + np),
            _ => 0.0,
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Column-major copy of a dataset's features, for split scanning.
pub(crate) struct Columns {
    cols: Vec<Vec<f64>>,
    positive: Vec<bool>,
}

impl Columns {
    pub(crate) fn new(dataset: &Dataset) -> Self {
        let cols = (0..dataset.schema().len()).map(|f| dataset.column(f)).collect();
        let positive = dataset.instances().iter().map(|i| i.label == Label::P).collect();
        Columns { cols, positive }
    }

    pub(crate) fn rows(&self) -> usize {
        self.positive.len()
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: f64,
}

fn class_mass(data: &Columns, idx: &[usize], weights: [f64; 2]) -> (f64, f64) {
    let p = idx.iter().filter(|&&i| data.positive[i]).count();
    (p as f64 * weights[0], (idx.len() - p) as f64 * weights[1])
}

/// `(p² + n²) / (p + n)`; maximizing its sum over children minimizes weighted Gini impurity.
fn purity(p: f64, n: f64) -> f64 {
    if p + n > 0.0 {
        (p * p + n * n) / (p + n)
    } else {
        0.0
    }
}

fn scan_feature(
    data: &Columns,
    idx: &[usize],
    feature: usize,
    min_leaf: usize,
    weights: [f64; 2],
    buf: &mut Vec<(f64, bool)>,
) -> Option<Candidate> {
    let col = &data.cols[feature];
    buf.clear();
    buf.extend(idx.iter().map(|&i| (col[i], data.positive[i])));
    buf.sort_by(|a, b| a.0.total_cmp(&b.0));

    let (tp, tn) = buf.iter().fold((0.0, 0.0), |(p, n), &(_, pos)| {
        if pos {
            (p + weights[0], n)
        } else {
            (p, n + weights[1])
        }
    });
    let m = buf.len();
    let (mut lp, mut ln) = (0.0, 0.0);
    let mut best: Option<Candidate> = None;
    for i in 0..m - 1 {
        if buf[i].1 {
            lp += weights[0];
        } else {
            ln += weights[1];
        }
        let (lo, hi) = (buf[i].0, buf[i + 1].0);
        if lo == hi || i + 1 < min_leaf || m - i - 1 < min_leaf {
            continue;
        }
        let score = purity(lp, ln) + purity(tp - lp, tn - ln);
        if best.as_ref().is_none_or(|b| score > b.score) {
            let mid = lo + (hi - lo) / 2.0;
            best = Some(Candidate {
                feature,
                threshold: if mid < hi { mid } else { lo },
                score,
            });
        }
    }
    best
}

/// Best split over `k` randomly ordered features; if none of them can split
/// the node, further features are tried until one can.
fn best_split<R: Rng>(
    data: &Columns,
    idx: &[usize],
    k: usize,
    min_leaf: usize,
    weights: [f64; 2],
    rng: &mut R,
    buf: &mut Vec<(f64, bool)>,
) -> Option<Candidate> {
    let mut order: Vec<usize> = (0..data.cols.len()).collect();
    order.shuffle(rng);
    let mut best: Option<Candidate> = None;
    for (tried, &f) in order.iter().enumerate() {
        if tried >= k && best.is_some() {
            break;
        }
        if let Some(c) = scan_feature(data, idx, f, min_leaf, weights, buf) {
            if best.as_ref().is_none_or(|b| c.score > b.score) {
                best = Some(c);
            }
        }
    }
    best
}

pub(crate) fn grow<R: Rng>(
    data: &Columns,
    sample: Vec<usize>,
    params: &TreeParams,
    weights: [f64; 2],
    rng: &mut R,
) -> TreeModel {
    let n_features = data.cols.len();
    let k = params.features_for(n_features);
    let min_leaf = params.min_leaf.max(1);
    let mut nodes = vec![Node::Leaf {
        p: 0.0,
        np: 0.0,
        count: 0,
    }];
    let mut buf = Vec::with_capacity(sample.len());
    let mut stack = vec![(0usize, sample, 0usize)];

    while let Some((slot, idx, depth)) = stack.pop() {
        let (p, np) = class_mass(data, &idx, weights);
        let leaf = Node::Leaf {
            p,
            np,
            count: idx.len(),
        };
        let stop = p == 0.0
            || np == 0.0
            || idx.len() < 2 * min_leaf
            || params.max_depth.is_some_and(|d| depth >= d);
        let split = if stop {
            None
        } else {
            best_split(data, &idx, k, min_leaf, weights, rng, &mut buf)
        };
        let Some(split) = split else {
            nodes[slot] = leaf;
            continue;
        };
        let col = &data.cols[split.feature];
        let (left, right): (Vec<usize>, Vec<usize>) =
            idx.into_iter().partition(|&i| col[i] <= split.threshold);
        let (l, r) = (nodes.len(), nodes.len() + 1);
        nodes.push(Node::Leaf {
            p: 0.0,
            np: 0.0,
            count: 0,
        });
        nodes.push(Node::Leaf {
            p: 0.0,
            np: 0.0,
            count: 0,
        });
        nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: l,
            right: r,
        };
        stack.push((r, right, depth + 1));
        stack.push((l, left, depth + 1));
    }
    TreeModel { nodes, n_features }
}

pub fn train_tree(dataset: &Dataset, params: &TreeParams, seed: u64) -> Result<TreeModel, LearnError> {
    train_tree_weighted(dataset, params, [1.0, 1.0], seed)
}

/// Like [`train_tree`] with per-class instance weights `[P, nP]`.
pub fn train_tree_weighted(
    dataset: &Dataset,
    params: &TreeParams,
    weights: [f64; 2],
    seed: u64,
) -> Result<TreeModel, LearnError> {
    if dataset.is_empty() {
        return Err(LearnError::EmptyDataset);
    }
    let data = Columns::new(dataset);
    let sample = (0..data.rows()).collect();
    Ok(grow(&data, sample, params, weights, &mut seed::rng(seed)))
}
