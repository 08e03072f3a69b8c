//! Histogram-binned regression trees shared by every model family.
//!
//! A node accumulates per-bin sums of a gradient `g` and a weight `h`; the
//! split maximising `gL²/(hL+λ) + gR²/(hR+λ) - g²/(h+λ)` wins and a leaf stores
//! `g/(h+λ)`. With `g = y`, `h = 1`, `λ = 0` this is variance reduction on the
//! 0/1 label (CART with Gini ordering, leaves hold the positive fraction). With
//! logistic residuals it is a Newton boosting step.

use ndarray::Array2;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::Rng;

/// Upper bound on bins per feature; codes fit in a `u8`.
pub const MAX_BINS: usize = 64;
/// Depth used when a spec leaves it unlimited.
pub const DEPTH_CAP: usize = 40;
const MIN_GAIN: f64 = 1e-12;

/// Feature matrix quantized to per-feature bins, stored column-major.
#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    codes: Vec<Vec<u8>>,
    edges: Vec<Vec<f64>>,
}

/// Bin edges from a column: every boundary between distinct values when there
/// are few of them, otherwise boundaries placed at roughly equal row counts.
fn feature_edges(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    let mut distinct = 1;
    for w in values.windows(2) {
        if w[0] < w[1] {
            distinct += 1;
        }
    }
    let mut edges = Vec::new();
    let mut i = 0;
    while i < n {
        let v = values[i];
        let mut j = i;
        while j < n && values[j] == v {
            j += 1;
        }
        if j < n {
            let target = (edges.len() + 1) * n / MAX_BINS;
            if distinct <= MAX_BINS || j >= target {
                edges.push(v + (values[j] - v) / 2.0);
            }
        }
        i = j;
    }
    edges
}

#[inline]
fn code_of(edges: &[f64], v: f64) -> u8 {
    edges.partition_point(|&e| e < v) as u8
}

impl BinnedMatrix {
    pub fn new(x: &Array2<f64>) -> Self {
        let edges: Vec<Vec<f64>> = x.columns().into_iter().map(|c| feature_edges(c.to_vec())).collect();
        let codes = x
            .columns()
            .into_iter()
            .zip(&edges)
            .map(|(c, e)| c.iter().map(|&v| code_of(e, v)).collect())
            .collect();
        Self { codes, edges }
    }

    pub fn n_rows(&self) -> usize {
        self.codes.first().map_or(0, Vec::len)
    }

    pub fn n_features(&self) -> usize {
        self.codes.len()
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.edges[feature].len() + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf { value: f64 },
    /// Rows with `x[feature] <= threshold` go left.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Fraction of features considered at each node.
    pub feature_fraction: f64,
    pub lambda: f64,
}

struct Grower<'a> {
    bins: &'a BinnedMatrix,
    g: &'a [f64],
    h: &'a [f64],
    params: GrowParams,
    n_try: usize,
    nodes: Vec<Node>,
}

#[derive(Clone, Copy, Default)]
struct Bin {
    g: f64,
    h: f64,
    count: usize,
}

struct Best {
    gain: f64,
    feature: usize,
    bin: usize,
}

impl Grower<'_> {
    fn leaf_value(&self, g: f64, h: f64) -> f64 {
        let denom = h + self.params.lambda;
        if denom > 0.0 {
            g / denom
        } else {
            0.0
        }
    }

    fn score(&self, g: f64, h: f64) -> f64 {
        let denom = h + self.params.lambda;
        if denom > 0.0 {
            g * g / denom
        } else {
            0.0
        }
    }

    fn best_split(&self, rows: &[usize], total_g: f64, total_h: f64, rng: &mut Rng) -> Option<Best> {
        let p = self.bins.n_features();
        let features: Vec<usize> = if self.n_try < p {
            let mut f = sample(rng, p, self.n_try).into_vec();
            f.sort_unstable();
            f
        } else {
            (0..p).collect()
        };
        let parent = self.score(total_g, total_h);
        let mut best: Option<Best> = None;
        let mut hist = Vec::with_capacity(MAX_BINS);
        for j in features {
            let nb = self.bins.n_bins(j);
            if nb < 2 {
                continue;
            }
            hist.clear();
            hist.resize(nb, Bin::default());
            let codes = &self.bins.codes[j];
            for &r in rows {
                let b = &mut hist[codes[r] as usize];
                b.g += self.g[r];
                b.h += self.h[r];
                b.count += 1;
            }
            let mut left = Bin::default();
            for (b, bin) in hist.iter().enumerate().take(nb - 1) {
                left.g += bin.g;
                left.h += bin.h;
                left.count += bin.count;
                let right_count = rows.len() - left.count;
                if left.count < self.params.min_leaf || right_count < self.params.min_leaf || bin.count == 0 {
                    continue;
                }
                let gain = self.score(left.g, left.h) + self.score(total_g - left.g, total_h - left.h) - parent;
                if gain > MIN_GAIN && best.as_ref().map_or(true, |s| gain > s.gain) {
                    best = Some(Best { gain, feature: j, bin: b });
                }
            }
        }
        best
    }

    fn grow(&mut self, rows: &mut [usize], depth: usize, rng: &mut Rng) -> usize {
        let (mut total_g, mut total_h) = (0.0, 0.0);
        for &r in rows.iter() {
            total_g += self.g[r];
            total_h += self.h[r];
        }
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: self.leaf_value(total_g, total_h) });
        if depth >= self.params.max_depth || rows.len() < 2 * self.params.min_leaf.max(1) {
            return id;
        }
        let Some(best) = self.best_split(rows, total_g, total_h, rng) else {
            return id;
        };
        let codes = &self.bins.codes[best.feature];
        let mut mid = 0;
        for i in 0..rows.len() {
            if (codes[rows[i]] as usize) <= best.bin {
                rows.swap(i, mid);
                mid += 1;
            }
        }
        let (l, r) = rows.split_at_mut(mid);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: self.bins.edges[best.feature][best.bin],
            left,
            right,
        };
        id
    }
}

/// Grow one tree on `rows` (repeats allowed, as in a bootstrap sample).
pub(crate) fn grow_tree(
    bins: &BinnedMatrix,
    rows: &mut [usize],
    g: &[f64],
    h: &[f64],
    params: GrowParams,
    rng: &mut Rng,
) -> Tree {
    let p = bins.n_features();
    let n_try = ((params.feature_fraction * p as f64).round() as usize).clamp(1, p.max(1));
    let mut grower = Grower { bins, g, h, params, n_try, nodes: Vec::new() };
    grower.grow(rows, 0, rng);
    Tree { nodes: grower.nodes }
}
