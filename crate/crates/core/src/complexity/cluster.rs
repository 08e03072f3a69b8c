use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{ComplexityProfile, Measure};
use crate::error::{Error, Result};
use crate::neighbors::sq_dist;
use crate::{seeded_rng, Rng};

/// Restarts per clustering; the lowest final inertia wins.
pub const RESTARTS: usize = 20;
const MAX_ITERATIONS: usize = 300;

/// One k-means run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansRun {
    /// Cluster index per point, 0-based, numbered by first appearance.
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after each batch assignment step.
    pub inertia_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub dataset_names: Vec<String>,
    /// Cluster id in 1..=k per dataset.
    pub clusters: Vec<usize>,
    /// Centroids in the z-scored measure space.
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
}

impl ClusterAssignment {
    pub fn cluster_of(&self, dataset: &str) -> Option<usize> {
        self.dataset_names.iter().position(|d| d == dataset).map(|i| self.clusters[i])
    }
}

fn nearest_centroid(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.0 {
            best = (d, c);
        }
    }
    best.1
}

fn inertia(points: &[Vec<f64>], assignment: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points.iter().zip(assignment).map(|(p, &c)| sq_dist(p, &centroids[c])).sum()
}

/// MacQueen k-means: k random seed points, one online pass that moves a
/// centroid after every assignment, then batch assign/update steps until the
/// assignment stops changing.
pub fn kmeans(points: &[Vec<f64>], k: usize, rng: &mut Rng) -> KMeansRun {
    let n = points.len();
    let seeds = sample(rng, n, k).into_vec();
    let mut centroids: Vec<Vec<f64>> = seeds.iter().map(|&i| points[i].clone()).collect();
    let mut counts = vec![1usize; k];
    for p in points {
        let c = nearest_centroid(p, &centroids);
        counts[c] += 1;
        let step = 1.0 / counts[c] as f64;
        for (m, v) in centroids[c].iter_mut().zip(p) {
            *m += step * (v - *m);
        }
    }
    let mut assignment: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    for _ in 0..MAX_ITERATIONS {
        let next: Vec<usize> = points.iter().map(|p| nearest_centroid(p, &centroids)).collect();
        trace.push(inertia(points, &next, &centroids));
        let changed = next != assignment;
        assignment = next;
        if !changed {
            break;
        }
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut sizes = vec![0usize; k];
        for (p, &c) in points.iter().zip(&assignment) {
            sizes[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if sizes[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / sizes[c] as f64).collect();
            }
        }
    }
    // renumber clusters by first appearance
    let mut map = vec![usize::MAX; k];
    let mut next_id = 0;
    for &c in &assignment {
        if map[c] == usize::MAX {
            map[c] = next_id;
            next_id += 1;
        }
    }
    for m in map.iter_mut().filter(|m| **m == usize::MAX) {
        *m = next_id;
        next_id += 1;
    }
    let mut ordered = vec![Vec::new(); k];
    for (c, centroid) in centroids.into_iter().enumerate() {
        ordered[map[c]] = centroid;
    }
    let assignment: Vec<usize> = assignment.iter().map(|&c| map[c]).collect();
    let final_inertia = inertia(points, &assignment, &ordered);
    KMeansRun { assignment, centroids: ordered, inertia: final_inertia, inertia_trace: trace }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len();
    if m % 2 == 1 {
        values[m / 2]
    } else {
        (values[m / 2 - 1] + values[m / 2]) / 2.0
    }
}

/// Profiles as rows of median-imputed, z-scored measures.
pub fn profile_matrix(profiles: &[ComplexityProfile]) -> Vec<Vec<f64>> {
    let mut rows = vec![Vec::with_capacity(Measure::ALL.len()); profiles.len()];
    for m in Measure::ALL {
        let mut present: Vec<f64> = profiles.iter().filter_map(|p| p.get(m)).collect();
        let fill = if present.is_empty() { 0.0 } else { median(&mut present) };
        let col: Vec<f64> = profiles.iter().map(|p| p.get(m).unwrap_or(fill)).collect();
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        let sd = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        for (r, v) in rows.iter_mut().zip(col) {
            r.push(if sd > 0.0 { (v - mean) / sd } else { 0.0 });
        }
    }
    rows
}

/// Group datasets by complexity profile with k-means over [`RESTARTS`] seeded
/// restarts.
pub fn cluster_datasets(profiles: &[ComplexityProfile], k: usize, seed: u64) -> Result<ClusterAssignment> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if profiles.len() < k {
        return Err(Error::TooFewProfiles { found: profiles.len(), k });
    }
    let points = profile_matrix(profiles);
    let mut rng = seeded_rng(seed);
    let mut best: Option<KMeansRun> = None;
    for _ in 0..RESTARTS {
        let run = kmeans(&points, k, &mut rng);
        if best.as_ref().map_or(true, |b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    Ok(ClusterAssignment {
        dataset_names: profiles.iter().map(|p| p.dataset_name.clone()).collect(),
        clusters: best.assignment.iter().map(|c| c + 1).collect(),
        centroids: best.centroids,
        inertia: best.inertia,
    })
}
