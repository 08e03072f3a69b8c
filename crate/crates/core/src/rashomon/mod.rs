//! Tree model pool, the empirical reference model, the ε-Rashomon set and the
//! discrepancy / obscurity multiplicity metrics.

mod models;
pub mod tree;

pub use models::{fit_model, grid, pool_specs, train_pool, Family, ModelSpec, Predictor, TrainedModel, TrainingSummary};

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::stats::mid_ranks;

/// Scores at or above this value predict class 1.
pub const THRESHOLD: f64 = 0.5;
pub const DEFAULT_EPSILON: f64 = 0.05;
pub const DEFAULT_POOL_SIZE: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    OneMinusAuc,
    ErrorRate,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::OneMinusAuc => "auc",
            LossKind::ErrorRate => "error",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auc" | "one_minus_auc" => Ok(LossKind::OneMinusAuc),
            "error" | "error_rate" => Ok(LossKind::ErrorRate),
            other => Err(Error::InvalidParameter(format!("unknown loss `{other}` (expected auc or error)"))),
        }
    }
}

/// Area under the ROC curve from mid-ranks; tied scores count one half.
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!("{} scores for {} labels", scores.len(), labels.len())));
    }
    let n1 = labels.iter().filter(|&&l| l == 1).count();
    let n0 = labels.len() - n1;
    if n1 == 0 || n0 == 0 {
        return Err(Error::SingleClassValidation);
    }
    let (ranks, _) = mid_ranks(scores);
    let r1: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l == 1).map(|(r, _)| r).sum();
    let n1f = n1 as f64;
    Ok((r1 - n1f * (n1f + 1.0) / 2.0) / (n1f * n0 as f64))
}

pub fn error_rate(scores: &[f64], labels: &[u8]) -> f64 {
    let wrong = scores.iter().zip(labels).filter(|(&s, &l)| u8::from(s >= THRESHOLD) != l).count();
    wrong as f64 / labels.len() as f64
}

pub fn loss_from_scores(scores: &[f64], labels: &[u8], kind: LossKind) -> Result<f64> {
    match kind {
        LossKind::OneMinusAuc => Ok(1.0 - auc(scores, labels)?),
        LossKind::ErrorRate => {
            if labels.is_empty() {
                return Err(Error::InvalidParameter("empty evaluation set".into()));
            }
            Ok(error_rate(scores, labels))
        }
    }
}

pub fn evaluate_loss(model: &TrainedModel, eval: &Dataset, kind: LossKind) -> Result<f64> {
    check_columns(model, eval.n_features())?;
    loss_from_scores(&model.scores(&eval.features), &eval.labels, kind)
}

fn check_columns(model: &TrainedModel, p: usize) -> Result<()> {
    if model.summary.n_features != p {
        return Err(Error::DimensionMismatch(format!(
            "model trained on {} features, input has {p}",
            model.summary.n_features
        )));
    }
    Ok(())
}

/// Index of the smallest loss; ties go to the lowest index.
pub fn reference_model(losses: &[f64]) -> Result<usize> {
    if losses.is_empty() {
        return Err(Error::EmptyPool);
    }
    let mut best = 0;
    for (i, &l) in losses.iter().enumerate() {
        if l < losses[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Indices with loss within `epsilon` of the reference loss, ascending.
pub fn members_within(losses: &[f64], reference: usize, epsilon: f64) -> Vec<usize> {
    let bound = losses[reference] + epsilon;
    (0..losses.len()).filter(|&i| i == reference || losses[i] <= bound).collect()
}

pub fn performance_gain(auc_after: f64, auc_before: f64) -> f64 {
    auc_after - auc_before
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RashomonSet {
    pub pool: Vec<TrainedModel>,
    pub losses: Vec<f64>,
    pub reference_index: usize,
    /// Pool indices of the members, ascending; includes the reference.
    pub member_indices: Vec<usize>,
    pub epsilon: f64,
    pub loss_kind: LossKind,
}

impl RashomonSet {
    pub fn reference(&self) -> &TrainedModel {
        &self.pool[self.reference_index]
    }

    pub fn n_members(&self) -> usize {
        self.member_indices.len()
    }

    /// Members at a different slack, from the stored losses.
    pub fn members_at(&self, epsilon: f64) -> Vec<usize> {
        members_within(&self.losses, self.reference_index, epsilon)
    }
}

/// Score every model on `eval` and keep those within `epsilon` of the best.
pub fn build_rashomon_set(pool: Vec<TrainedModel>, eval: &Dataset, epsilon: f64, kind: LossKind) -> Result<RashomonSet> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be a finite value >= 0, got {epsilon}")));
    }
    let losses = pool.iter().map(|m| evaluate_loss(m, eval, kind)).collect::<Result<Vec<_>>>()?;
    let reference_index = reference_model(&losses)?;
    let member_indices = members_within(&losses, reference_index, epsilon);
    Ok(RashomonSet { pool, losses, reference_index, member_indices, epsilon, loss_kind: kind })
}

/// Binary predictions of the Rashomon members, one column per member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionMatrix {
    /// n_obs x n_members, entries 0 or 1.
    pub preds: Array2<u8>,
    pub reference_column: usize,
    /// Pool index behind each column.
    pub member_indices: Vec<usize>,
    pub obs_ids: Vec<u64>,
}

impl PredictionMatrix {
    /// Build from raw columns; mostly useful for tests and fixtures.
    pub fn from_columns(columns: &[Vec<u8>], reference_column: usize) -> Result<Self> {
        let m = columns.len();
        if m == 0 || reference_column >= m {
            return Err(Error::InvalidParameter("reference column must exist".into()));
        }
        let n = columns[0].len();
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::DimensionMismatch("columns differ in length".into()));
        }
        let preds = Array2::from_shape_fn((n, m), |(i, j)| columns[j][i]);
        Ok(Self { preds, reference_column, member_indices: (0..m).collect(), obs_ids: (0..n as u64).collect() })
    }

    pub fn n_obs(&self) -> usize {
        self.preds.nrows()
    }

    pub fn n_members(&self) -> usize {
        self.preds.ncols()
    }
}

/// Predict every row of `data` with every member at [`THRESHOLD`].
pub fn prediction_matrix(rset: &RashomonSet, data: &Dataset) -> Result<PredictionMatrix> {
    let p = data.n_features();
    let mut columns = Vec::with_capacity(rset.n_members());
    for &i in &rset.member_indices {
        let model = &rset.pool[i];
        check_columns(model, p)?;
        columns.push(model.scores(&data.features).into_iter().map(|s| u8::from(s >= THRESHOLD)).collect::<Vec<u8>>());
    }
    let reference_column = rset
        .member_indices
        .iter()
        .position(|&i| i == rset.reference_index)
        .expect("reference is a member");
    let mut pm = PredictionMatrix::from_columns(&columns, reference_column)?;
    pm.member_indices = rset.member_indices.clone();
    pm.obs_ids = data.row_ids.clone();
    Ok(pm)
}

/// Fraction of observations on which each column disagrees with the reference
/// (the reference's own entry is 0).
pub fn per_model_disagreement(pm: &PredictionMatrix) -> Vec<f64> {
    let n = pm.n_obs() as f64;
    let r = pm.reference_column;
    (0..pm.n_members())
        .map(|j| {
            let d = pm.preds.rows().into_iter().filter(|row| row[j] != row[r]).count();
            if n > 0.0 {
                d as f64 / n
            } else {
                0.0
            }
        })
        .collect()
}

/// Per observation, the fraction of members that disagree with the reference.
/// The denominator counts non-reference members unless `include_reference`.
pub fn per_obs_conflict(pm: &PredictionMatrix, include_reference: bool) -> Vec<f64> {
    let m = pm.n_members();
    let r = pm.reference_column;
    let denom = if include_reference { m } else { m - 1 };
    pm.preds
        .rows()
        .into_iter()
        .map(|row| {
            if denom == 0 {
                return 0.0;
            }
            let d = (0..m).filter(|&j| j != r && row[j] != row[r]).count();
            d as f64 / denom as f64
        })
        .collect()
}

/// Largest fraction of observations on which a non-reference member disagrees
/// with the reference; 0 without such members.
pub fn discrepancy(pm: &PredictionMatrix) -> f64 {
    let r = pm.reference_column;
    per_model_disagreement(pm)
        .into_iter()
        .enumerate()
        .filter(|&(j, _)| j != r)
        .map(|(_, d)| d)
        .fold(0.0, f64::max)
}

/// Mean over observations of the fraction of non-reference members that
/// disagree with the reference.
pub fn obscurity(pm: &PredictionMatrix) -> f64 {
    obscurity_with(pm, false)
}

/// Computed as one integer count over n * members, so equal inputs give
/// bit-identical results regardless of how the mean is grouped.
pub fn obscurity_with(pm: &PredictionMatrix, include_reference: bool) -> f64 {
    let m = pm.n_members();
    let r = pm.reference_column;
    let denom = pm.n_obs() * if include_reference { m } else { m - 1 };
    if denom == 0 {
        return 0.0;
    }
    let conflicts: usize = pm
        .preds
        .rows()
        .into_iter()
        .map(|row| (0..m).filter(|&j| j != r && row[j] != row[r]).count())
        .sum();
    conflicts as f64 / denom as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityReport {
    pub discrepancy: f64,
    pub obscurity: f64,
    pub per_model_disagreement: Vec<f64>,
    pub per_obs_conflict: Vec<f64>,
    pub epsilon: f64,
    pub n_members: usize,
}

pub fn multiplicity_report(pm: &PredictionMatrix, epsilon: f64, include_reference: bool) -> MultiplicityReport {
    MultiplicityReport {
        discrepancy: discrepancy(pm),
        obscurity: obscurity_with(pm, include_reference),
        per_model_disagreement: per_model_disagreement(pm),
        per_obs_conflict: per_obs_conflict(pm, include_reference),
        epsilon,
        n_members: pm.n_members(),
    }
}
