use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::{class_stats, Dataset};
use crate::error::{Error, Result};

/// Ridge added to the within-class scatter before solving for the direction.
pub const SCATTER_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    /// 1 / (1 + max Fisher ratio); NA when every feature is degenerate.
    pub f1: Option<f64>,
    /// Largest per-feature Fisher ratio.
    pub fisher_max: Option<f64>,
    pub f1v: Option<f64>,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
}

/// Per-feature Fisher ratio (mu0 - mu1)^2 / (var0 + var1). `None` where both
/// within-class variances are zero.
pub fn fisher_ratios(ds: &Dataset) -> Vec<Option<f64>> {
    let idx = [ds.indices_of(0), ds.indices_of(1)];
    (0..ds.n_features())
        .map(|j| {
            let mut m = [0.0; 2];
            let mut v = [0.0; 2];
            for c in 0..2 {
                let vals: Vec<f64> = idx[c].iter().map(|&i| ds.features[(i, j)]).collect();
                let n = vals.len() as f64;
                m[c] = vals.iter().sum::<f64>() / n;
                v[c] = vals.iter().map(|x| (x - m[c]) * (x - m[c])).sum::<f64>() / n;
            }
            let denom = v[0] + v[1];
            (denom > 0.0).then(|| (m[0] - m[1]).powi(2) / denom)
        })
        .collect()
}

fn class_ranges(ds: &Dataset, rows: &[usize], j: usize) -> [(f64, f64); 2] {
    let mut r = [(f64::INFINITY, f64::NEG_INFINITY); 2];
    for &i in rows {
        let c = ds.labels[i] as usize;
        let v = ds.features[(i, j)];
        r[c].0 = r[c].0.min(v);
        r[c].1 = r[c].1.max(v);
    }
    r
}

/// Overlap interval [max of minima, min of maxima]; empty when lo > hi.
fn overlap_interval(r: &[(f64, f64); 2]) -> (f64, f64) {
    (r[0].0.max(r[1].0), r[0].1.min(r[1].1))
}

/// Directional Fisher criterion along w = (S_W + ridge I)^-1 (mu0 - mu1).
fn directional_fisher(ds: &Dataset) -> Option<f64> {
    let p = ds.n_features();
    let n = ds.n_rows() as f64;
    let mut sw = DMatrix::<f64>::zeros(p, p);
    let mut means = [DVector::<f64>::zeros(p), DVector::<f64>::zeros(p)];
    for c in 0..2 {
        let rows = ds.indices_of(c as u8);
        let nc = rows.len() as f64;
        for &i in &rows {
            for j in 0..p {
                means[c][j] += ds.features[(i, j)] / nc;
            }
        }
        let weight = nc / n;
        let mut cov = DMatrix::<f64>::zeros(p, p);
        for &i in &rows {
            let d = DVector::from_iterator(p, (0..p).map(|j| ds.features[(i, j)] - means[c][j]));
            cov.ger(1.0 / nc, &d, &d, 1.0);
        }
        sw += cov * weight;
    }
    let diff = &means[0] - &means[1];
    let regularized = &sw + DMatrix::<f64>::identity(p, p) * SCATTER_RIDGE;
    let w = regularized.lu().solve(&diff)?;
    let between = w.dot(&diff).powi(2);
    let within = w.dot(&(&sw * &w));
    (within > 0.0 && between.is_finite()).then(|| between / within)
}

/// f2 as the product of per-feature overlap/range ratios.
fn volume_of_overlap(ds: &Dataset) -> f64 {
    let all: Vec<usize> = (0..ds.n_rows()).collect();
    let mut product = 1.0;
    for j in 0..ds.n_features() {
        let r = class_ranges(ds, &all, j);
        let (lo, hi) = overlap_interval(&r);
        let range = r[0].1.max(r[1].1) - r[0].0.min(r[1].0);
        if range <= 0.0 {
            continue;
        }
        product *= ((hi - lo).max(0.0)) / range;
    }
    product
}

fn in_overlap(ds: &Dataset, rows: &[usize], j: usize) -> Vec<bool> {
    let r = class_ranges(ds, rows, j);
    let (lo, hi) = overlap_interval(&r);
    rows.iter()
        .map(|&i| {
            let v = ds.features[(i, j)];
            lo <= hi && v >= lo && v <= hi
        })
        .collect()
}

/// f3: smallest per-feature fraction of rows inside the overlap interval.
fn feature_efficiency(ds: &Dataset) -> f64 {
    let all: Vec<usize> = (0..ds.n_rows()).collect();
    (0..ds.n_features())
        .map(|j| in_overlap(ds, &all, j).iter().filter(|&&b| b).count())
        .min()
        .map_or(1.0, |c| c as f64 / ds.n_rows() as f64)
}

/// f4: fraction of rows still inside an overlap region after greedily
/// removing the rows each most efficient feature separates.
fn collective_efficiency(ds: &Dataset) -> f64 {
    let mut remaining: Vec<usize> = (0..ds.n_rows()).collect();
    let mut used = vec![false; ds.n_features()];
    loop {
        let has0 = remaining.iter().any(|&i| ds.labels[i] == 0);
        let has1 = remaining.iter().any(|&i| ds.labels[i] == 1);
        if !(has0 && has1) {
            remaining.clear();
            break;
        }
        let mut best: Option<(usize, Vec<bool>, usize)> = None;
        for j in (0..ds.n_features()).filter(|&j| !used[j]) {
            let mask = in_overlap(ds, &remaining, j);
            let separated = mask.iter().filter(|&&b| !b).count();
            if best.as_ref().map_or(true, |b| separated > b.2) {
                best = Some((j, mask, separated));
            }
        }
        let Some((j, mask, separated)) = best else { break };
        if separated == 0 {
            break;
        }
        used[j] = true;
        remaining = remaining.into_iter().zip(mask).filter(|(_, inside)| *inside).map(|(i, _)| i).collect();
        if remaining.is_empty() {
            break;
        }
    }
    remaining.len() as f64 / ds.n_rows() as f64
}

/// Feature-overlap measures on raw feature values.
pub fn overlapping_metrics(ds: &Dataset) -> Result<Overlap> {
    let s = class_stats(ds);
    if s.n_minority == 0 || s.n_majority == 0 {
        return Err(Error::SingleClass);
    }
    if s.n_minority < 2 || s.n_majority < 2 {
        return Err(Error::TooFewPerClass { found: s.n_minority.min(s.n_majority), needed: 2 });
    }
    let fisher_max = fisher_ratios(ds).into_iter().flatten().reduce(f64::max);
    Ok(Overlap {
        f1: fisher_max.map(|r| 1.0 / (1.0 + r)),
        fisher_max,
        f1v: directional_fisher(ds).map(|r| 1.0 / (1.0 + r)),
        f2: volume_of_overlap(ds),
        f3: feature_efficiency(ds),
        f4: collective_efficiency(ds),
    })
}
