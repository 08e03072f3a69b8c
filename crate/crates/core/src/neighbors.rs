//! Exact brute-force k-nearest-neighbour search under Euclidean distance.
//!
//! Ties are broken by the lower row index so results never depend on
//! iteration or thread order.

use std::cmp::Ordering;

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// k nearest neighbours for a set of query rows.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    pub k: usize,
    /// Query row indices, in the order they were requested.
    pub queries: Vec<usize>,
    /// For each query, neighbour row indices sorted by ascending distance.
    pub indices: Vec<Vec<usize>>,
    pub distances: Vec<Vec<f64>>,
}

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

#[inline]
pub fn row(x: &Array2<f64>, i: usize) -> &[f64] {
    x.row(i).to_slice().expect("standard layout")
}

pub(crate) fn by_dist_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// The `k` nearest rows to `query` among `candidates`, excluding the query row
/// itself. Returns `(distance, index)` pairs in ascending order.
pub fn nearest(x: &Array2<f64>, query: usize, candidates: &[usize], k: usize) -> Vec<(f64, usize)> {
    let q = row(x, query);
    let mut cand: Vec<(f64, usize)> = candidates
        .iter()
        .filter(|&&c| c != query)
        .map(|&c| (sq_dist(q, row(x, c)), c))
        .collect();
    let k = k.min(cand.len());
    if k == 0 {
        return Vec::new();
    }
    if k < cand.len() {
        cand.select_nth_unstable_by(k - 1, by_dist_then_index);
        cand.truncate(k);
    }
    cand.sort_unstable_by(by_dist_then_index);
    cand.into_iter().map(|(d, i)| (d.sqrt(), i)).collect()
}

/// k nearest neighbours of every row among all other rows.
pub fn knn(x: &Array2<f64>, k: usize) -> Result<NeighborGraph> {
    let all: Vec<usize> = (0..x.nrows()).collect();
    knn_among(x, &all, &all, k)
}

/// k nearest neighbours of each query row among the candidate rows. A query
/// that is itself a candidate is never its own neighbour.
pub fn knn_among(x: &Array2<f64>, queries: &[usize], candidates: &[usize], k: usize) -> Result<NeighborGraph> {
    if k == 0 {
        return Err(Error::KZero);
    }
    let mut sorted_cand = candidates.to_vec();
    sorted_cand.sort_unstable();
    let any_shared = queries.iter().any(|q| sorted_cand.binary_search(q).is_ok());
    let available = candidates.len() - usize::from(any_shared);
    if k > available {
        return Err(Error::KTooLarge { k, available });
    }
    let rows: Vec<Vec<(f64, usize)>> = queries.par_iter().map(|&q| nearest(x, q, candidates, k)).collect();
    let (indices, distances) = rows
        .into_iter()
        .map(|r| r.into_iter().map(|(d, i)| (i, d)).unzip())
        .unzip();
    Ok(NeighborGraph {
        k,
        queries: queries.to_vec(),
        indices,
        distances,
    })
}
