use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng as _;

use super::{largest_remainder, oversample_count, search_space, unchanged, validate, BalanceSpec, OutcomeBuilder, ResampleOutcome};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::neighbors::{knn_among, nearest, NeighborGraph};
use crate::{seeded_rng, Rng};

/// Minority-class data shared by the SMOTE variants.
pub(super) struct MinorityContext {
    pub z: Array2<f64>,
    /// Row indices of minority rows.
    pub minority: Vec<usize>,
    /// k nearest minority neighbours of each minority row (row indices).
    pub graph: NeighborGraph,
}

impl MinorityContext {
    pub(super) fn new(data: &Dataset, spec: &BalanceSpec) -> Result<Self> {
        let minority = data.indices_of(1);
        if spec.k >= minority.len() {
            return Err(Error::KTooLarge { k: spec.k, available: minority.len().saturating_sub(1) });
        }
        let z = search_space(data, spec);
        let graph = knn_among(&z, &minority, &minority, spec.k)?;
        Ok(Self { z, minority, graph })
    }

    /// Number of majority rows among the k nearest neighbours (all classes) of
    /// each minority row.
    pub(super) fn majority_counts(&self, data: &Dataset, k: usize) -> Result<Vec<usize>> {
        let all: Vec<usize> = (0..data.n_rows()).collect();
        let g = knn_among(&self.z, &self.minority, &all, k)?;
        Ok(g.indices
            .iter()
            .map(|nb| nb.iter().filter(|&&j| data.labels[j] == 0).count())
            .collect())
    }
}

/// Emit one SMOTE sample from minority position `a`.
fn emit(out: &mut OutcomeBuilder, data: &Dataset, ctx: &MinorityContext, a: usize, rng: &mut Rng) {
    let anchor = ctx.minority[a];
    let nb = &ctx.graph.indices[a];
    let partner = nb[rng.gen_range(0..nb.len())];
    let lambda: f64 = rng.gen();
    out.interpolate(data.row(anchor), data.row(partner), lambda, anchor, partner);
}

/// Cycle through the anchors (positions into the minority list) in shuffled
/// order until `g` samples exist.
fn round_robin(out: &mut OutcomeBuilder, data: &Dataset, ctx: &MinorityContext, anchors: &[usize], g: usize, rng: &mut Rng) {
    let mut order = anchors.to_vec();
    order.shuffle(rng);
    for t in 0..g {
        emit(out, data, ctx, order[t % order.len()], rng);
    }
}

/// Emit `alloc[a]` samples from each minority position in turn.
fn allocated(out: &mut OutcomeBuilder, data: &Dataset, ctx: &MinorityContext, alloc: &[usize], rng: &mut Rng) {
    for (a, &count) in alloc.iter().enumerate() {
        for _ in 0..count {
            emit(out, data, ctx, a, rng);
        }
    }
}

pub fn smote(data: &Dataset, spec: &BalanceSpec) -> Result<ResampleOutcome> {
    validate(data, spec)?;
    let g = oversample_count(data, spec.target_ratio);
    if g == 0 {
        return Ok(unchanged(data));
    }
    let ctx = MinorityContext::new(data, spec)?;
    let mut rng = seeded_rng(spec.seed);
    let mut out = OutcomeBuilder::new(data);
    let anchors: Vec<usize> = (0..ctx.minority.len()).collect();
    round_robin(&mut out, data, &ctx, &anchors, g, &mut rng);
    Ok(out.finish())
}

/// ADASYN allocation: shares proportional to the majority fraction of each
/// minority row's neighbourhood, uniform when no row has majority neighbours.
pub fn adasyn_allocation(majority_counts: &[usize], k: usize, g: usize) -> Vec<usize> {
    let r: Vec<f64> = majority_counts.iter().map(|&d| d as f64 / k as f64).collect();
    if r.iter().all(|&v| v == 0.0) {
        largest_remainder(&vec![1.0; r.len()], g)
    } else {
        largest_remainder(&r, g)
    }
}

pub fn adasyn(data: &Dataset, spec: &BalanceSpec) -> Result<ResampleOutcome> {
    validate(data, spec)?;
    let g = oversample_count(data, spec.target_ratio);
    if g == 0 {
        return Ok(unchanged(data));
    }
    let ctx = MinorityContext::new(data, spec)?;
    let delta = ctx.majority_counts(data, spec.k)?;
    let alloc = adasyn_allocation(&delta, spec.k, g);
    let mut rng = seeded_rng(spec.seed);
    let mut out = OutcomeBuilder::new(data);
    allocated(&mut out, data, &ctx, &alloc, &mut rng);
    Ok(out.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BorderlineCategory {
    Safe,
    Danger,
    Noise,
}

/// Category of a minority row with `delta` majority rows among `k` neighbours.
pub fn borderline_category(delta: usize, k: usize) -> BorderlineCategory {
    if delta == k {
        BorderlineCategory::Noise
    } else if 2 * delta >= k {
        BorderlineCategory::Danger
    } else {
        BorderlineCategory::Safe
    }
}

pub fn borderline_smote(data: &Dataset, spec: &BalanceSpec) -> Result<ResampleOutcome> {
    validate(data, spec)?;
    let g = oversample_count(data, spec.target_ratio);
    if g == 0 {
        return Ok(unchanged(data));
    }
    let ctx = MinorityContext::new(data, spec)?;
    let delta = ctx.majority_counts(data, spec.k)?;
    let cats: Vec<BorderlineCategory> = delta.iter().map(|&d| borderline_category(d, spec.k)).collect();
    let danger: Vec<usize> = (0..cats.len()).filter(|&a| cats[a] == BorderlineCategory::Danger).collect();
    if danger.is_empty() {
        return Err(Error::EmptyDangerSet);
    }
    let mut rng = seeded_rng(spec.seed);
    let mut out = OutcomeBuilder::new(data);
    out.trace_mut().noise_skipped = cats.iter().filter(|&&c| c == BorderlineCategory::Noise).count();
    round_robin(&mut out, data, &ctx, &danger, g, &mut rng);
    Ok(out.finish())
}

/// Allocation proportional to inverse mean neighbour distance.
pub fn density_allocation(mean_distances: &[f64], g: usize) -> Vec<usize> {
    let w: Vec<f64> = mean_distances.iter().map(|&d| 1.0 / d.max(f64::EPSILON)).collect();
    largest_remainder(&w, g)
}

pub fn dbsmote(data: &Dataset, spec: &BalanceSpec) -> Result<ResampleOutcome> {
    validate(data, spec)?;
    let g = oversample_count(data, spec.target_ratio);
    if g == 0 {
        return Ok(unchanged(data));
    }
    let ctx = MinorityContext::new(data, spec)?;
    let d: Vec<f64> = ctx.graph.distances.iter().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
    let alloc = density_allocation(&d, g);
    let mut rng = seeded_rng(spec.seed);
    let mut out = OutcomeBuilder::new(data);
    allocated(&mut out, data, &ctx, &alloc, &mut rng);
    Ok(out.finish())
}

/// Smallest neighbourhood size (capped at `cap`) whose members include a
/// minority row, with the minority rows found. `None` when the cap is reached
/// without one.
pub fn adaptive_neighborhood(z: &Array2<f64>, labels: &[u8], query: usize, cap: usize) -> Option<(usize, Vec<usize>)> {
    let all: Vec<usize> = (0..labels.len()).collect();
    let nb = nearest(z, query, &all, cap);
    let first = nb.iter().position(|&(_, j)| labels[j] == 1)?;
    let k_prime = first + 1;
    let found = nb[..k_prime].iter().filter(|&&(_, j)| labels[j] == 1).map(|&(_, j)| j).collect();
    Some((k_prime, found))
}

pub fn adaptive_neighbor_smote(data: &Dataset, spec: &BalanceSpec) -> Result<ResampleOutcome> {
    validate(data, spec)?;
    let g = oversample_count(data, spec.target_ratio);
    if g == 0 {
        return Ok(unchanged(data));
    }
    let minority = data.indices_of(1);
    if minority.len() < 2 {
        return Err(Error::KTooLarge { k: 1, available: 0 });
    }
    let z = search_space(data, spec);
    let cap = (3 * spec.k).min(data.n_rows() - 1);
    let hoods: Vec<Option<(usize, Vec<usize>)>> = minority
        .iter()
        .map(|&i| adaptive_neighborhood(&z, &data.labels, i, cap))
        .collect();
    let valid: Vec<usize> = (0..minority.len()).filter(|&a| hoods[a].is_some()).collect();
    if valid.is_empty() {
        return Err(Error::NoValidAnchors);
    }
    let mut rng = seeded_rng(spec.seed);
    let mut out = OutcomeBuilder::new(data);
    out.trace_mut().noise_skipped = minority.len() - valid.len();
    let mut order = valid;
    order.shuffle(&mut rng);
    for t in 0..g {
        let a = order[t % order.len()];
        let anchor = minority[a];
        let partners = &hoods[a].as_ref().expect("valid anchor").1;
        let partner = partners[rng.gen_range(0..partners.len())];
        let lambda: f64 = rng.gen();
        out.interpolate(data.row(anchor), data.row(partner), lambda, anchor, partner);
    }
    Ok(out.finish())
}
