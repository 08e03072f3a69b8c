#![allow(dead_code)]

use multiplicity_core::{seeded_rng, Dataset};
use ndarray::Array2;
use rand::Rng;

/// Gaussian-ish blobs: class 0 centred at the origin, class 1 shifted by
/// `shift` in every coordinate. Minority is class 1.
pub fn blobs(seed: u64, n_major: usize, n_minor: usize, p: usize, shift: f64) -> Dataset {
    let mut rng = seeded_rng(seed);
    let n = n_major + n_minor;
    let mut labels = vec![0u8; n_major];
    labels.extend(std::iter::repeat(1u8).take(n_minor));
    let x = Array2::from_shape_fn((n, p), |(i, _)| {
        let u: f64 = (0..4).map(|_| rng.gen::<f64>()).sum::<f64>() - 2.0;
        u + if labels[i] == 1 { shift } else { 0.0 }
    });
    Dataset::from_parts("blobs", x, labels).unwrap()
}

/// Uniform random features with arbitrary labels.
pub fn uniform(seed: u64, labels: &[u8], p: usize) -> Dataset {
    let mut rng = seeded_rng(seed);
    let x = Array2::from_shape_fn((labels.len(), p), |_| rng.gen::<f64>());
    Dataset::from_parts("uniform", x, labels.to_vec()).unwrap()
}

pub fn swap_labels(ds: &Dataset) -> Dataset {
    let flipped = ds.labels.iter().map(|&l| 1 - l).collect();
    Dataset::from_parts(&ds.name, ds.features.clone(), flipped).unwrap()
}
