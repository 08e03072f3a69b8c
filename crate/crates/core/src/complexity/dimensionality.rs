use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::ComplexityOptions;
use crate::dataset::{standardize, Dataset};

/// Share of variance the retained principal components must reach.
pub const VARIANCE_SHARE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dimensionality {
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    /// Components needed for 95% of the variance.
    pub k95: usize,
}

/// Eigenvalues of the sample covariance matrix, largest first.
pub fn pca_eigenvalues(x: &Array2<f64>) -> Vec<f64> {
    let (n, p) = x.dim();
    let means: Vec<f64> = (0..p).map(|j| x.column(j).sum() / n as f64).collect();
    let mut cov = DMatrix::<f64>::zeros(p, p);
    for row in x.rows() {
        for a in 0..p {
            let da = row[a] - means[a];
            if da == 0.0 {
                continue;
            }
            for b in a..p {
                cov[(a, b)] += da * (row[b] - means[b]);
            }
        }
    }
    let denom = (n.max(2) - 1) as f64;
    for a in 0..p {
        for b in a..p {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(cov).eigenvalues.iter().map(|v| v.max(0.0)).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Smallest number of leading eigenvalues whose share reaches `share`.
pub fn components_for_share(eigenvalues: &[f64], share: f64) -> usize {
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return 1;
    }
    let mut acc = 0.0;
    for (i, v) in eigenvalues.iter().enumerate() {
        acc += v;
        if acc >= share * total {
            return i + 1;
        }
    }
    eigenvalues.len()
}

pub fn dimensionality_metrics(ds: &Dataset, options: &ComplexityOptions) -> Dimensionality {
    let (n, p) = ds.features.dim();
    let ev = if options.pca_standardize {
        pca_eigenvalues(&standardize(&ds.features))
    } else {
        pca_eigenvalues(&ds.features)
    };
    let k95 = components_for_share(&ev, VARIANCE_SHARE).max(1);
    let (n, p, k) = (n as f64, p as f64, k95 as f64);
    if options.inverted_dimensionality {
        Dimensionality { t2: n / p, t3: n / k, t4: p / k, k95 }
    } else {
        Dimensionality { t2: p / n, t3: k / n, t4: k / p, k95 }
    }
}
