use ndarray::Array2;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::{class_stats, column_moments, Dataset};
use crate::error::{Error, Result};
use crate::seeded_rng;

/// Linear SVM training schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub epochs: usize,
    /// Step size at epoch t is `learning_rate / sqrt(t)`.
    pub learning_rate: f64,
    /// Weight of the summed hinge loss against the 0.5 * |w|^2 penalty.
    pub c: f64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self { epochs: 500, learning_rate: 0.01, c: 1.0 }
    }
}

/// Linear decision function on standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Primal objective after each epoch.
    pub loss_trace: Vec<f64>,
    /// Standardization applied to raw rows before the decision function.
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl LinearModel {
    /// Decision value for an already standardized row.
    pub fn decision_z(&self, z: &[f64]) -> f64 {
        self.weights.iter().zip(z).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn standardize_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, v)| if self.sds[j] > 0.0 { (v - self.means[j]) / self.sds[j] } else { 0.0 })
            .collect()
    }

    /// Class 1 when the decision value is non-negative.
    pub fn predict(&self, row: &[f64]) -> u8 {
        u8::from(self.decision_z(&self.standardize_row(row)) >= 0.0)
    }

    pub fn weight_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Linearity {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
}

fn standardized(ds: &Dataset) -> (Array2<f64>, Vec<f64>, Vec<f64>) {
    let (means, sds) = column_moments(&ds.features);
    let mut z = ds.features.clone();
    for (j, mut col) in z.columns_mut().into_iter().enumerate() {
        let (m, s) = (means[j], sds[j]);
        col.mapv_inplace(|v| if s > 0.0 { (v - m) / s } else { 0.0 });
    }
    (z, means, sds)
}

/// Hinge-loss linear SVM, `0.5 |w|^2 + C * sum(hinge)`, trained by full-batch
/// subgradient descent on standardized features. The iterate with the lowest
/// objective is returned. The seed only sets the initial weights.
pub fn train_linear_classifier(ds: &Dataset, seed: u64, cfg: &SvmConfig) -> Result<LinearModel> {
    let s = class_stats(ds);
    if s.n_minority == 0 || s.n_majority == 0 {
        return Err(Error::SingleClass);
    }
    let (z, means, sds) = standardized(ds);
    Ok(fit_standardized(&z, &ds.labels, seed, cfg, means, sds))
}

fn fit_standardized(z: &Array2<f64>, labels: &[u8], seed: u64, cfg: &SvmConfig, means: Vec<f64>, sds: Vec<f64>) -> LinearModel {
    let (n, p) = z.dim();
    let sign: Vec<f64> = labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let mut rng = seeded_rng(seed);
    let mut w: Vec<f64> = (0..p).map(|_| rng.gen_range(-1e-3..1e-3)).collect();
    let mut b = 0.0;
    let mut best = (f64::INFINITY, w.clone(), b);
    let mut trace = Vec::with_capacity(cfg.epochs);
    let mut grad = vec![0.0; p];
    for epoch in 1..=cfg.epochs {
        grad.copy_from_slice(&w);
        let mut grad_b = 0.0;
        let mut hinge = 0.0;
        for i in 0..n {
            let row = z.row(i);
            let row = row.as_slice().expect("standard layout");
            let f: f64 = w.iter().zip(row).map(|(a, v)| a * v).sum::<f64>() + b;
            let margin = sign[i] * f;
            if margin < 1.0 {
                hinge += 1.0 - margin;
                for (g, v) in grad.iter_mut().zip(row) {
                    *g -= cfg.c * sign[i] * v;
                }
                grad_b -= cfg.c * sign[i];
            }
        }
        let objective = 0.5 * w.iter().map(|a| a * a).sum::<f64>() + cfg.c * hinge;
        trace.push(objective);
        if objective < best.0 {
            best = (objective, w.clone(), b);
        }
        let step = cfg.learning_rate / (epoch as f64).sqrt();
        for (a, g) in w.iter_mut().zip(&grad) {
            *a -= step * g;
        }
        b -= step * grad_b;
    }
    LinearModel { weights: best.1, bias: best.2, loss_trace: trace, means, sds }
}

/// l1: mean distance of misclassified rows to the hyperplane, mapped by S/(1+S);
/// l2: training error; l3: error on same-class interpolants (n of them).
pub fn linearity_metrics(ds: &Dataset, seed: u64, cfg: &SvmConfig) -> Result<Linearity> {
    let s = class_stats(ds);
    if s.n_minority == 0 || s.n_majority == 0 {
        return Err(Error::SingleClass);
    }
    let (z, means, sds) = standardized(ds);
    let model = fit_standardized(&z, &ds.labels, seed, cfg, means, sds);
    let n = ds.n_rows();
    let norm = model.weight_norm();
    let mut errors = 0usize;
    let mut dist_sum = 0.0;
    for i in 0..n {
        let f = model.decision_z(z.row(i).as_slice().expect("standard layout"));
        if u8::from(f >= 0.0) != ds.labels[i] {
            errors += 1;
            if norm > 0.0 {
                dist_sum += f.abs() / norm;
            }
        }
    }
    let s_mean = dist_sum / n as f64;

    let mut rng = seeded_rng(seed ^ 0x5eed_0003);
    let mut interp_errors = 0usize;
    let p = ds.n_features();
    let mut point = vec![0.0; p];
    for class in [0u8, 1] {
        let idx = ds.indices_of(class);
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
            for j in 0..p {
                point[j] = z[(a, j)] + lambda * (z[(b, j)] - z[(a, j)]);
            }
            if u8::from(model.decision_z(&point) >= 0.0) != class {
                interp_errors += 1;
            }
        }
    }
    Ok(Linearity {
        l1: s_mean / (1.0 + s_mean),
        l2: errors as f64 / n as f64,
        l3: interp_errors as f64 / n as f64,
    })
}
