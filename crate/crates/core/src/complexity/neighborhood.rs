use ndarray::Array2;
use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ComplexityOptions;
use crate::dataset::{class_stats, scaled, Dataset};
use crate::error::{Error, Result};
use crate::neighbors::{dist, row};
use crate::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighborhood {
    pub n1: f64,
    pub n2: f64,
    pub n3: f64,
    pub n4: f64,
    pub t1: f64,
    pub lsc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    /// (parent, child, length) for every vertex but the root.
    pub edges: Vec<(usize, usize, f64)>,
    pub total_weight: f64,
}

/// Exact Euclidean minimum spanning tree by Prim's algorithm on the implicit
/// complete graph. Ties pick the lower vertex index.
pub fn minimum_spanning_tree(z: &Array2<f64>) -> SpanningTree {
    let n = z.nrows();
    let mut in_tree = vec![false; n];
    let mut key = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    if n == 0 {
        return SpanningTree { edges, total_weight: 0.0 };
    }
    key[0] = 0.0;
    for _ in 0..n {
        let mut u = usize::MAX;
        for v in 0..n {
            if !in_tree[v] && (u == usize::MAX || key[v] < key[u]) {
                u = v;
            }
        }
        in_tree[u] = true;
        if parent[u] != usize::MAX {
            edges.push((parent[u], u, key[u]));
        }
        let zu = row(z, u);
        let updates: Vec<(usize, f64)> = (0..n)
            .into_par_iter()
            .filter(|&v| !in_tree[v])
            .filter_map(|v| {
                let d = dist(zu, row(z, v));
                (d < key[v]).then_some((v, d))
            })
            .collect();
        for (v, d) in updates {
            key[v] = d;
            parent[v] = u;
        }
    }
    let total_weight = edges.iter().map(|e| e.2).sum();
    SpanningTree { edges, total_weight }
}

/// Fraction of vertices incident to an MST edge joining different classes.
pub fn n1_measure(tree: &SpanningTree, labels: &[u8]) -> f64 {
    let mut border = vec![false; labels.len()];
    for &(a, b, _) in &tree.edges {
        if labels[a] != labels[b] {
            border[a] = true;
            border[b] = true;
        }
    }
    border.iter().filter(|&&b| b).count() as f64 / labels.len() as f64
}

/// Nearest same-class row, nearest other-class row and nearest row overall.
#[derive(Debug, Clone, Copy)]
struct Nearest {
    same: f64,
    enemy: f64,
    any: usize,
}

fn nearest_info(z: &Array2<f64>, labels: &[u8]) -> Vec<Nearest> {
    let n = z.nrows();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let zi = row(z, i);
            let mut same = f64::INFINITY;
            let mut enemy = f64::INFINITY;
            let mut any = (f64::INFINITY, usize::MAX);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = dist(zi, row(z, j));
                if labels[j] == labels[i] {
                    same = same.min(d);
                } else {
                    enemy = enemy.min(d);
                }
                if d < any.0 {
                    any = (d, j);
                }
            }
            Nearest { same, enemy, any: any.1 }
        })
        .collect()
}

fn n2_from(info: &[Nearest]) -> f64 {
    let total: f64 = info
        .iter()
        .map(|r| {
            if r.same.is_infinite() {
                1.0
            } else if r.same + r.enemy > 0.0 {
                r.same / (r.same + r.enemy)
            } else {
                0.0
            }
        })
        .sum();
    total / info.len() as f64
}

fn n3_from(info: &[Nearest], labels: &[u8]) -> f64 {
    let errors = info.iter().enumerate().filter(|(i, r)| labels[r.any] != labels[*i]).count();
    errors as f64 / labels.len() as f64
}

/// Mean over rows of intra / (intra + extra) nearest-neighbour distance.
pub fn n2_measure(z: &Array2<f64>, labels: &[u8]) -> f64 {
    n2_from(&nearest_info(z, labels))
}

/// Leave-one-out 1-NN error rate.
pub fn n3_measure(z: &Array2<f64>, labels: &[u8]) -> f64 {
    n3_from(&nearest_info(z, labels), labels)
}

fn lsc_from(z: &Array2<f64>, info: &[Nearest]) -> f64 {
    let n = z.nrows();
    let total: usize = (0..n)
        .into_par_iter()
        .map(|i| {
            let zi = row(z, i);
            let radius = info[i].enemy;
            (0..n).filter(|&j| dist(zi, row(z, j)) < radius).count()
        })
        .sum();
    1.0 - total as f64 / (n as f64 * n as f64)
}

/// 1 - (1/n^2) * sum of local-set sizes; a local set holds the rows closer
/// than the nearest enemy, the row itself included.
pub fn lsc_measure(z: &Array2<f64>, labels: &[u8]) -> f64 {
    lsc_from(z, &nearest_info(z, labels))
}

fn hyperspheres_from(z: &Array2<f64>, labels: &[u8], info: &[Nearest]) -> usize {
    let n = z.nrows();
    (0..n)
        .into_par_iter()
        .filter(|&j| {
            let zj = row(z, j);
            let rj = info[j].enemy;
            !(0..n).any(|i| {
                i != j
                    && labels[i] == labels[j]
                    && (info[i].enemy > rj || (info[i].enemy == rj && i < j))
                    && dist(row(z, i), zj) + rj <= info[i].enemy
            })
        })
        .count()
}

/// Hyperspheres left after growing each row's sphere to its nearest enemy and
/// discarding spheres contained in a larger same-class sphere.
pub fn hypersphere_count(z: &Array2<f64>, labels: &[u8]) -> usize {
    hyperspheres_from(z, labels, &nearest_info(z, labels))
}

fn n4_from(z: &Array2<f64>, labels: &[u8], seed: u64) -> f64 {
    let n = z.nrows();
    let p = z.ncols();
    let mut rng = seeded_rng(seed ^ 0x5eed_0004);
    let mut points = Vec::with_capacity(n);
    for class in [0u8, 1] {
        let idx: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        for _ in 0..idx.len() {
            let a = idx[rng.gen_range(0..idx.len())];
            let b = if idx.len() > 1 {
                loop {
                    let c = idx[rng.gen_range(0..idx.len())];
                    if c != a {
                        break c;
                    }
                }
            } else {
                a
            };
            let lambda: f64 = rng.gen();
            let pt: Vec<f64> = (0..p).map(|j| z[(a, j)] + lambda * (z[(b, j)] - z[(a, j)])).collect();
            points.push((pt, class));
        }
    }
    let errors = points
        .par_iter()
        .filter(|(pt, class)| {
            let mut best = (f64::INFINITY, usize::MAX);
            for j in 0..n {
                let d = dist(pt, row(z, j));
                if d < best.0 {
                    best = (d, j);
                }
            }
            labels[best.1] != *class
        })
        .count();
    errors as f64 / points.len() as f64
}

/// Neighbourhood measures on (by default) z-scored features.
pub fn neighborhood_metrics(ds: &Dataset, seed: u64, options: &ComplexityOptions) -> Result<Neighborhood> {
    let s = class_stats(ds);
    if s.n_minority == 0 || s.n_majority == 0 {
        return Err(Error::SingleClass);
    }
    let reduced;
    let ds = if ds.n_rows() > options.size_cutoff {
        if !options.subsample_large {
            return Err(Error::TooLarge(ds.n_rows()));
        }
        let mut rng = seeded_rng(seed ^ 0x5eed_0005);
        let mut rows = sample(&mut rng, ds.n_rows(), options.size_cutoff).into_vec();
        rows.sort_unstable();
        reduced = ds.subset(&rows);
        &reduced
    } else {
        ds
    };
    let z = scaled(&ds.features, options.neighborhood_scaling);
    let labels = &ds.labels;
    let n = ds.n_rows() as f64;
    let info = nearest_info(&z, labels);
    let tree = minimum_spanning_tree(&z);
    Ok(Neighborhood {
        n1: n1_measure(&tree, labels),
        n2: n2_from(&info),
        n3: n3_from(&info, labels),
        n4: n4_from(&z, labels, seed),
        t1: hyperspheres_from(&z, labels, &info) as f64 / n,
        lsc: lsc_from(&z, &info),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn n1_on_a_line() {
        let z = array![[0.0], [1.0], [2.0], [3.0]];
        let tree = minimum_spanning_tree(&z);
        assert_eq!(tree.total_weight, 3.0);
        assert_eq!(n1_measure(&tree, &[0, 0, 1, 1]), 0.5);
    }

    #[test]
    fn duplicates_with_consistent_labels() {
        let z = array![[0.0], [0.0], [5.0], [5.0]];
        assert_eq!(n3_measure(&z, &[0, 0, 1, 1]), 0.0);
    }

    #[test]
    fn local_sets_and_spheres_by_hand() {
        // class 0 at 0, 1; class 1 at 3, 4
        let z = array![[0.0], [1.0], [3.0], [4.0]];
        let labels = [0, 0, 1, 1];
        // nearest enemies: 3, 2, 2, 3; local sets: {0,1}, {0,1}, {2,3}, {2,3}
        assert_eq!(lsc_measure(&z, &labels), 0.5);
        // sphere of row 0 (radius 3) contains row 1's sphere (1 + 2 <= 3)
        assert_eq!(hypersphere_count(&z, &labels), 2);
        // n2: rows 0 and 3 give 1/(1+3), rows 1 and 2 give 1/(1+2)
        assert!((n2_measure(&z, &labels) - (0.25 + 1.0 / 3.0) / 2.0).abs() < 1e-15);
    }
}
