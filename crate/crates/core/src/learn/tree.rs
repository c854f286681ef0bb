//! Histogram-based CART trees.
//!
//! Each feature is cut into at most 256 bins once per training run. Split
//! search scans bin histograms; a split on bin `b` sends `x <= threshold[b]`
//! left, so the stored thresholds work on raw values at prediction time.
//! With 256 or fewer distinct values per feature the thresholds are the
//! midpoints between consecutive values, which makes the search exact.

use serde::{Deserialize, Serialize};

const MAX_BINS: usize = 256;

/// Column-major binned copy of a feature matrix.
#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    pub n_rows: usize,
    pub n_features: usize,
    bins: Vec<u8>,
    thresholds: Vec<Vec<f64>>,
}

impl BinnedMatrix {
    pub fn new(x: &[Vec<f64>]) -> Self {
        let n_rows = x.len();
        let n_features = x.first().map_or(0, Vec::len);
        let mut bins = vec![0u8; n_rows * n_features];
        let mut thresholds = Vec::with_capacity(n_features);
        for f in 0..n_features {
            let mut vals: Vec<f64> = x.iter().map(|r| clean(r[f])).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            let cuts: Vec<f64> = if vals.len() <= MAX_BINS {
                vals.windows(2).map(|w| midpoint(w[0], w[1])).collect()
            } else {
                let mut c: Vec<f64> = (1..MAX_BINS)
                    .map(|q| {
                        let i = q * vals.len() / MAX_BINS;
                        midpoint(vals[i - 1], vals[i])
                    })
                    .collect();
                c.dedup();
                c
            };
            for (i, r) in x.iter().enumerate() {
                let v = clean(r[f]);
                bins[f * n_rows + i] = cuts.partition_point(|t| *t < v) as u8;
            }
            thresholds.push(cuts);
        }
        BinnedMatrix { n_rows, n_features, bins, thresholds }
    }

    #[inline]
    pub fn bin(&self, row: usize, feature: usize) -> usize {
        self.bins[feature * self.n_rows + row] as usize
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.thresholds[feature].len() + 1
    }

    pub fn threshold(&self, feature: usize, bin: usize) -> f64 {
        self.thresholds[feature][bin]
    }
}

fn clean(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    // guard against rounding up to b for adjacent floats
    if m >= b {
        a
    } else {
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    Split { feature: usize, threshold: f64, left: u32, right: u32 },
    Leaf { value: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn leaf_value(&self, row: &[f64]) -> &[f64] {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split { feature, threshold, left, right } => {
                    i = if row[*feature] <= *threshold { *left as usize } else { *right as usize };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &DecisionTree, i: usize) -> usize {
            match &t.nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(t, *left as usize).max(go(t, *right as usize)),
            }
        }
        go(self, 0)
    }
}

/// Best split found for a node: feature, bin, score.
struct Candidate {
    feature: usize,
    bin: usize,
    score: f64,
}

fn partition(m: &BinnedMatrix, idx: &mut [usize], feature: usize, bin: usize) -> usize {
    let mut l = 0;
    for i in 0..idx.len() {
        if m.bin(idx[i], feature) <= bin {
            idx.swap(l, i);
            l += 1;
        }
    }
    l
}

pub struct ClassTreeParams {
    pub max_depth: usize,
    pub min_samples_split: usize,
}

/// Gini classification tree over the rows in `idx` (duplicates allowed).
/// `features_at_node` picks the candidate features for each split.
pub fn grow_classification_tree(
    m: &BinnedMatrix,
    y: &[usize],
    n_classes: usize,
    idx: &mut [usize],
    params: &ClassTreeParams,
    features_at_node: &mut dyn FnMut() -> Vec<usize>,
) -> DecisionTree {
    let mut tree = DecisionTree { nodes: Vec::new() };
    grow_class_node(m, y, n_classes, idx, 0, params, features_at_node, &mut tree);
    tree
}

fn class_dist(y: &[usize], idx: &[usize], n_classes: usize) -> Vec<f64> {
    let mut c = vec![0.0; n_classes];
    for &i in idx {
        c[y[i]] += 1.0;
    }
    c
}

fn gini_sum(counts: &[f64], n: f64) -> f64 {
    // n * gini = n - sum(c^2)/n
    if n == 0.0 {
        return 0.0;
    }
    n - counts.iter().map(|c| c * c).sum::<f64>() / n
}

#[allow(clippy::too_many_arguments)]
fn grow_class_node(
    m: &BinnedMatrix,
    y: &[usize],
    n_classes: usize,
    idx: &mut [usize],
    depth: usize,
    params: &ClassTreeParams,
    features_at_node: &mut dyn FnMut() -> Vec<usize>,
    tree: &mut DecisionTree,
) -> u32 {
    let me = tree.nodes.len();
    let counts = class_dist(y, idx, n_classes);
    let n = idx.len() as f64;
    let pure = counts.iter().filter(|c| **c > 0.0).count() <= 1;
    let leaf = |counts: &[f64]| TreeNode::Leaf { value: counts.iter().map(|c| c / n.max(1.0)).collect() };
    if pure || depth >= params.max_depth || idx.len() < params.min_samples_split {
        tree.nodes.push(leaf(&counts));
        return me as u32;
    }
    let parent = gini_sum(&counts, n);
    let mut best: Option<Candidate> = None;
    let mut hist = Vec::new();
    for f in features_at_node() {
        let nb = m.n_bins(f);
        if nb < 2 {
            continue;
        }
        hist.clear();
        hist.resize(nb * n_classes, 0.0);
        for &i in idx.iter() {
            hist[m.bin(i, f) * n_classes + y[i]] += 1.0;
        }
        let mut left = vec![0.0; n_classes];
        let mut nl = 0.0;
        for b in 0..nb - 1 {
            for c in 0..n_classes {
                left[c] += hist[b * n_classes + c];
            }
            nl += hist[b * n_classes..(b + 1) * n_classes].iter().sum::<f64>();
            let nr = n - nl;
            if nl == 0.0 || nr == 0.0 {
                continue;
            }
            let right: Vec<f64> = counts.iter().zip(&left).map(|(t, l)| t - l).collect();
            let gain = parent - gini_sum(&left, nl) - gini_sum(&right, nr);
            if gain > 1e-12 && best.as_ref().map_or(true, |c| gain > c.score) {
                best = Some(Candidate { feature: f, bin: b, score: gain });
            }
        }
    }
    let Some(best) = best else {
        tree.nodes.push(leaf(&counts));
        return me as u32;
    };
    tree.nodes.push(TreeNode::Leaf { value: Vec::new() });
    let cut = partition(m, idx, best.feature, best.bin);
    let (l_idx, r_idx) = idx.split_at_mut(cut);
    let l = grow_class_node(m, y, n_classes, l_idx, depth + 1, params, features_at_node, tree);
    let r = grow_class_node(m, y, n_classes, r_idx, depth + 1, params, features_at_node, tree);
    tree.nodes[me] = TreeNode::Split {
        feature: best.feature,
        threshold: m.threshold(best.feature, best.bin),
        left: l,
        right: r,
    };
    me as u32
}

pub struct RegTreeParams {
    pub max_depth: usize,
    pub lambda: f64,
    pub min_child_weight: f64,
    /// Multiplies leaf weights.
    pub learning_rate: f64,
}

/// Second-order regression tree: split gain
/// `G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)`, leaf weight `-G/(H+l)`.
pub fn grow_regression_tree(
    m: &BinnedMatrix,
    grad: &[f64],
    hess: &[f64],
    idx: &mut [usize],
    params: &RegTreeParams,
) -> DecisionTree {
    let mut tree = DecisionTree { nodes: Vec::new() };
    grow_reg_node(m, grad, hess, idx, 0, params, &mut tree);
    tree
}

fn grow_reg_node(
    m: &BinnedMatrix,
    grad: &[f64],
    hess: &[f64],
    idx: &mut [usize],
    depth: usize,
    params: &RegTreeParams,
    tree: &mut DecisionTree,
) -> u32 {
    let me = tree.nodes.len();
    let g: f64 = idx.iter().map(|&i| grad[i]).sum();
    let h: f64 = idx.iter().map(|&i| hess[i]).sum();
    let lam = params.lambda;
    let leaf = TreeNode::Leaf { value: vec![-g / (h + lam) * params.learning_rate] };
    if depth >= params.max_depth || idx.len() < 2 {
        tree.nodes.push(leaf);
        return me as u32;
    }
    let parent = g * g / (h + lam);
    let mut best: Option<Candidate> = None;
    let mut hg = Vec::new();
    let mut hh = Vec::new();
    for f in 0..m.n_features {
        let nb = m.n_bins(f);
        if nb < 2 {
            continue;
        }
        hg.clear();
        hg.resize(nb, 0.0);
        hh.clear();
        hh.resize(nb, 0.0);
        let mut cnt = vec![0usize; nb];
        for &i in idx.iter() {
            let b = m.bin(i, f);
            hg[b] += grad[i];
            hh[b] += hess[i];
            cnt[b] += 1;
        }
        let (mut gl, mut hl, mut nl) = (0.0, 0.0, 0usize);
        for b in 0..nb - 1 {
            gl += hg[b];
            hl += hh[b];
            nl += cnt[b];
            let (gr, hr) = (g - gl, h - hl);
            if nl == 0 || nl == idx.len() || hl < params.min_child_weight || hr < params.min_child_weight {
                continue;
            }
            let gain = gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent;
            if gain > 1e-12 && best.as_ref().map_or(true, |c| gain > c.score) {
                best = Some(Candidate { feature: f, bin: b, score: gain });
            }
        }
    }
    let Some(best) = best else {
        tree.nodes.push(leaf);
        return me as u32;
    };
    tree.nodes.push(TreeNode::Leaf { value: Vec::new() });
    let cut = partition(m, idx, best.feature, best.bin);
    let (l_idx, r_idx) = idx.split_at_mut(cut);
    let l = grow_reg_node(m, grad, hess, l_idx, depth + 1, params, tree);
    let r = grow_reg_node(m, grad, hess, r_idx, depth + 1, params, tree);
    tree.nodes[me] = TreeNode::Split {
        feature: best.feature,
        threshold: m.threshold(best.feature, best.bin),
        left: l,
        right: r,
    };
    me as u32
}
