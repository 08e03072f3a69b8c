//! Class balancing by random resampling, prototype selection and SMOTE-style
//! synthetic oversampling.
//!
//! Neighbourhoods are computed on standardized features by default while
//! synthetic rows are interpolated in the original feature space, so every
//! synthetic row lies on the segment between two minority rows.

mod random;
mod safe_level;
mod smote;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{class_stats, scaled, Dataset, Scaling};
use crate::error::{Error, Result};

pub use random::{near_miss, random_oversample, random_undersample};
pub use safe_level::{biased_lambda, relocated_anchor, relocating_safe_level_smote, safe_level_smote, SAFE_THRESHOLD};
pub use smote::{
    adasyn_allocation, adaptive_neighbor_smote, adasyn, borderline_category, borderline_smote, dbsmote, density_allocation,
    smote, BorderlineCategory,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    None,
    Oversample,
    Undersample,
    NearMiss,
    Smote,
    Adasyn,
    Borderline,
    DensityBased,
    SafeLevel,
    RelocatingSafeLevel,
    AdaptiveNeighbor,
}

impl Method {
    /// Every method, `None` first.
    pub const ALL: [Method; 11] = [
        Method::None,
        Method::Oversample,
        Method::Undersample,
        Method::NearMiss,
        Method::Smote,
        Method::Adasyn,
        Method::Borderline,
        Method::DensityBased,
        Method::SafeLevel,
        Method::RelocatingSafeLevel,
        Method::AdaptiveNeighbor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::None => "none",
            Method::Oversample => "oversample",
            Method::Undersample => "undersample",
            Method::NearMiss => "nearmiss",
            Method::Smote => "smote",
            Method::Adasyn => "adasyn",
            Method::Borderline => "blsmote",
            Method::DensityBased => "dbsmote",
            Method::SafeLevel => "slsmote",
            Method::RelocatingSafeLevel => "rslsmote",
            Method::AdaptiveNeighbor => "ansmote",
        }
    }

    /// True for methods that create synthetic rows by interpolation.
    pub fn is_synthetic(self) -> bool {
        !matches!(self, Method::None | Method::Oversample | Method::Undersample | Method::NearMiss)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown balancing method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalanceSpec {
    pub method: Method,
    /// Neighbourhood size.
    pub k: usize,
    /// Desired majority/minority ratio after balancing.
    pub target_ratio: f64,
    pub seed: u64,
    pub scaling: Scaling,
}

impl BalanceSpec {
    pub fn new(method: Method, seed: u64) -> Self {
        Self {
            method,
            k: 5,
            target_ratio: 1.0,
            seed,
            scaling: Scaling::Standardized,
        }
    }
}

/// Where an output row came from. Ids refer to `row_ids` of the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Original,
    Duplicate { source: u64 },
    /// Lies on the segment between the two parent rows.
    Synthetic { anchor: u64, neighbor: u64 },
}

/// Counters describing what a method did.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodTrace {
    pub original: usize,
    pub duplicated: usize,
    pub synthetic: usize,
    pub removed: usize,
    /// Minority rows skipped as noise.
    pub noise_skipped: usize,
    /// Unsafe anchors moved before interpolation.
    pub relocated: usize,
}

#[derive(Debug, Clone)]
pub struct ResampleOutcome {
    /// Kept original rows in input order, followed by new rows.
    pub data: Dataset,
    /// One entry per row of `data`.
    pub provenance: Vec<Provenance>,
    /// Row ids of dropped majority rows.
    pub removed: Vec<u64>,
    pub trace: MethodTrace,
}

/// Balance `data` with the method named in `spec`.
pub fn balance(data: &Dataset, spec: &BalanceSpec) -> Result<ResampleOutcome> {
    validate(data, spec)?;
    match spec.method {
        Method::None => Ok(unchanged(data)),
        Method::Oversample => random_oversample(data, spec),
        Method::Undersample => random_undersample(data, spec),
        Method::NearMiss => near_miss(data, spec),
        Method::Smote => smote(data, spec),
        Method::Adasyn => adasyn(data, spec),
        Method::Borderline => borderline_smote(data, spec),
        Method::DensityBased => dbsmote(data, spec),
        Method::SafeLevel => safe_level_smote(data, spec),
        Method::RelocatingSafeLevel => relocating_safe_level_smote(data, spec),
        Method::AdaptiveNeighbor => adaptive_neighbor_smote(data, spec),
    }
}

pub(crate) fn validate(data: &Dataset, spec: &BalanceSpec) -> Result<()> {
    if !(spec.target_ratio.is_finite() && spec.target_ratio >= 1.0) {
        return Err(Error::InvalidParameter(format!("target ratio {}", spec.target_ratio)));
    }
    if spec.k == 0 {
        return Err(Error::KZero);
    }
    let s = class_stats(data);
    if s.n_minority == 0 || s.n_majority == 0 {
        return Err(Error::SingleClass);
    }
    Ok(())
}

pub(crate) fn unchanged(data: &Dataset) -> ResampleOutcome {
    ResampleOutcome {
        data: data.clone(),
        provenance: vec![Provenance::Original; data.n_rows()],
        removed: Vec::new(),
        trace: MethodTrace { original: data.n_rows(), ..Default::default() },
    }
}

/// Number of minority rows to add so that n_majority / n_minority reaches the
/// target ratio.
pub fn oversample_count(data: &Dataset, target_ratio: f64) -> usize {
    let s = class_stats(data);
    let wanted = (s.n_majority as f64 / target_ratio).round() as usize;
    wanted.saturating_sub(s.n_minority)
}

/// Majority rows to keep so that n_majority / n_minority reaches the target.
pub fn undersample_keep(data: &Dataset, target_ratio: f64) -> usize {
    let s = class_stats(data);
    ((target_ratio * s.n_minority as f64).round() as usize).clamp(1, s.n_majority)
}

/// Split `total` across `weights` proportionally with largest-remainder
/// rounding; ties in the remainder go to the lower index.
pub fn largest_remainder(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let shares: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut out: Vec<usize> = shares.iter().map(|s| s.floor() as usize).collect();
    let assigned: usize = out.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = shares[a] - shares[a].floor();
        let rb = shares[b] - shares[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        out[i] += 1;
    }
    out
}

/// Collects new rows and assembles the outcome.
pub(crate) struct OutcomeBuilder<'a> {
    data: &'a Dataset,
    keep: Vec<usize>,
    new_rows: Vec<Vec<f64>>,
    new_prov: Vec<Provenance>,
    trace: MethodTrace,
}

impl<'a> OutcomeBuilder<'a> {
    pub(crate) fn new(data: &'a Dataset) -> Self {
        Self {
            data,
            keep: (0..data.n_rows()).collect(),
            new_rows: Vec::new(),
            new_prov: Vec::new(),
            trace: MethodTrace::default(),
        }
    }

    pub(crate) fn keep_only(&mut self, keep: Vec<usize>) {
        self.keep = keep;
    }

    pub(crate) fn trace_mut(&mut self) -> &mut MethodTrace {
        &mut self.trace
    }

    pub(crate) fn duplicate(&mut self, i: usize) {
        self.new_rows.push(self.data.row(i).to_vec());
        self.new_prov.push(Provenance::Duplicate { source: self.data.row_ids[i] });
    }

    /// Add `base + lambda * (toward - base)` with parents `anchor` and `neighbor`.
    pub(crate) fn interpolate(&mut self, base: &[f64], toward: &[f64], lambda: f64, anchor: usize, neighbor: usize) {
        let row = base.iter().zip(toward).map(|(a, b)| a + lambda * (b - a)).collect();
        self.new_rows.push(row);
        self.new_prov.push(Provenance::Synthetic {
            anchor: self.data.row_ids[anchor],
            neighbor: self.data.row_ids[neighbor],
        });
    }

    pub(crate) fn finish(self) -> ResampleOutcome {
        let data = self.data;
        let mut kept = data.subset(&self.keep);
        let mut removed_mask = vec![true; data.n_rows()];
        for &i in &self.keep {
            removed_mask[i] = false;
        }
        let removed: Vec<u64> = (0..data.n_rows())
            .filter(|&i| removed_mask[i])
            .map(|i| data.row_ids[i])
            .collect();
        let mut provenance = vec![Provenance::Original; self.keep.len()];
        let mut trace = self.trace;
        trace.original = self.keep.len();
        trace.removed = removed.len();
        if !self.new_rows.is_empty() {
            let p = data.n_features();
            let flat: Vec<f64> = self.new_rows.iter().flatten().copied().collect();
            let extra = Array2::from_shape_vec((self.new_rows.len(), p), flat).expect("row width");
            kept.features = ndarray::concatenate(Axis(0), &[kept.features.view(), extra.view()]).expect("same width");
            let mut next_id = data.row_ids.iter().copied().max().map_or(0, |m| m + 1);
            for prov in &self.new_prov {
                kept.labels.push(1);
                kept.row_ids.push(next_id);
                next_id += 1;
                match prov {
                    Provenance::Duplicate { .. } => trace.duplicated += 1,
                    Provenance::Synthetic { .. } => trace.synthetic += 1,
                    Provenance::Original => {}
                }
            }
            provenance.extend(self.new_prov);
        }
        ResampleOutcome { data: kept, provenance, removed, trace }
    }
}

/// Feature matrix used for neighbourhood queries.
pub(crate) fn search_space(data: &Dataset, spec: &BalanceSpec) -> Array2<f64> {
    scaled(&data.features, spec.scaling)
}
