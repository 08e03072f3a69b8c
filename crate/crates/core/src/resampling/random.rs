use rand::seq::SliceRandom;
use rand::Rng as _;

use super::{oversample_count, search_space, undersample_keep, unchanged, validate, BalanceSpec, OutcomeBuilder, ResampleOutcome};
use crate::dataset::{class_stats, Dataset};
use crate::error::{Error, Result};
use crate::neighbors::{by_dist_then_index, knn_among};
use crate::seeded_rng;

/// Duplicate minority rows uniformly at random with replacement.
pub fn random_oversample(data: &Dataset, spec: &BalanceSpec) -> Result<ResampleOutcome> {
    validate(data, spec)?;
    let g = oversample_count(data, spec.target_ratio);
    if g == 0 {
        return Ok(unchanged(data));
    }
    let minority = data.indices_of(1);
    let mut rng = seeded_rng(spec.seed);
    let mut out = OutcomeBuilder::new(data);
    for _ in 0..g {
        out.duplicate(minority[rng.gen_range(0..minority.len())]);
    }
    Ok(out.finish())
}

/// Drop majority rows uniformly at random without replacement.
pub fn random_undersample(data: &Dataset, spec: &BalanceSpec) -> Result<ResampleOutcome> {
    validate(data, spec)?;
    let n_keep = undersample_keep(data, spec.target_ratio);
    let mut majority = data.indices_of(0);
    if n_keep >= majority.len() {
        return Ok(unchanged(data));
    }
    let mut rng = seeded_rng(spec.seed);
    majority.shuffle(&mut rng);
    let mut keep: Vec<usize> = data.indices_of(1);
    keep.extend_from_slice(&majority[..n_keep]);
    keep.sort_unstable();
    let mut out = OutcomeBuilder::new(data);
    out.keep_only(keep);
    Ok(out.finish())
}

/// NearMiss-1: keep the majority rows with the smallest mean distance to
/// their k nearest minority rows. Ties go to the lower row index.
pub fn near_miss(data: &Dataset, spec: &BalanceSpec) -> Result<ResampleOutcome> {
    validate(data, spec)?;
    let n_keep = undersample_keep(data, spec.target_ratio);
    let s = class_stats(data);
    if n_keep >= s.n_majority {
        return Ok(unchanged(data));
    }
    if spec.k > s.n_minority {
        return Err(Error::KTooLarge { k: spec.k, available: s.n_minority });
    }
    let z = search_space(data, spec);
    let minority = data.indices_of(1);
    let majority = data.indices_of(0);
    let graph = knn_among(&z, &majority, &minority, spec.k)?;
    let mut scored: Vec<(f64, usize)> = graph
        .distances
        .iter()
        .zip(&majority)
        .map(|(d, &i)| (d.iter().sum::<f64>() / d.len() as f64, i))
        .collect();
    scored.sort_by(by_dist_then_index);
    let mut keep = minority;
    keep.extend(scored[..n_keep].iter().map(|&(_, i)| i));
    keep.sort_unstable();
    let mut out = OutcomeBuilder::new(data);
    out.keep_only(keep);
    Ok(out.finish())
}
