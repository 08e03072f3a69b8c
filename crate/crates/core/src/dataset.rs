//! Tabular binary classification data: loading, class statistics, splitting.
//!
//! The minority class is always encoded as label 1. Categorical columns are
//! one-hot encoded at load time; rows with a missing cell are dropped.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeded_rng;

const MISSING_TOKENS: [&str; 7] = ["", "NA", "na", "?", "NaN", "nan", "null"];

/// How an encoded feature column relates to the source file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureKind {
    Numeric,
    /// Indicator column for `level` of the categorical source column `source`.
    OneHot { source: String, level: String },
}

/// Binary classification dataset with a dense real-valued feature matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    /// Row-major n x p matrix.
    pub features: Array2<f64>,
    /// 1 = minority (positive) class, 0 = majority.
    pub labels: Vec<u8>,
    pub feature_names: Vec<String>,
    pub feature_kinds: Vec<FeatureKind>,
    /// Source-file label mapped to 1.
    pub positive_label: String,
    /// Source-file label mapped to 0.
    pub negative_label: String,
    /// Stable identifiers; loaded rows are numbered from 0 in file order.
    pub row_ids: Vec<u64>,
}

/// Class counts and imbalance ratio. `n_minority` counts label 1 and
/// `n_majority` label 0, which is how loaded data is oriented.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub n: usize,
    pub n_minority: usize,
    pub n_majority: usize,
    /// Larger class count over smaller (infinite when a class is empty).
    pub ir: f64,
}

/// Train/test pair from a stratified split.
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
}

/// Standardization mode for distance-based computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Scaling {
    /// Z-score each column (population standard deviation).
    #[default]
    Standardized,
    Raw,
}

impl Dataset {
    /// Build a dataset from in-memory parts. Labels must already be 0/1.
    pub fn from_parts(name: &str, features: Array2<f64>, labels: Vec<u8>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} feature rows vs {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::InvalidParameter("labels must be 0 or 1".into()));
        }
        let p = features.ncols();
        let n = labels.len();
        Ok(Self {
            name: name.to_string(),
            features,
            labels,
            feature_names: (0..p).map(|j| format!("x{}", j + 1)).collect(),
            feature_kinds: vec![FeatureKind::Numeric; p],
            positive_label: "1".into(),
            negative_label: "0".into(),
            row_ids: (0..n as u64).collect(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features
            .row(i)
            .to_slice()
            .expect("feature matrix is kept in standard layout")
    }

    pub fn indices_of(&self, class: u8) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| self.labels[i] == class).collect()
    }

    /// Rows in the given order (duplicates allowed).
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        let features = self.features.select(Axis(0), rows);
        Dataset {
            name: self.name.clone(),
            features: ensure_standard(features),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            feature_kinds: self.feature_kinds.clone(),
            positive_label: self.positive_label.clone(),
            negative_label: self.negative_label.clone(),
            row_ids: rows.iter().map(|&i| self.row_ids[i]).collect(),
        }
    }

    /// Keep only the given feature columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Dataset {
        let features = self.features.select(Axis(1), cols);
        Dataset {
            name: self.name.clone(),
            features: ensure_standard(features),
            labels: self.labels.clone(),
            feature_names: cols.iter().map(|&j| self.feature_names[j].clone()).collect(),
            feature_kinds: cols.iter().map(|&j| self.feature_kinds[j].clone()).collect(),
            positive_label: self.positive_label.clone(),
            negative_label: self.negative_label.clone(),
            row_ids: self.row_ids.clone(),
        }
    }
}

fn ensure_standard(a: Array2<f64>) -> Array2<f64> {
    if a.is_standard_layout() {
        a
    } else {
        a.as_standard_layout().to_owned()
    }
}

/// Load a delimited text file with a header row.
///
/// Columns whose non-missing cells all parse as numbers are numeric; every
/// other column is one-hot encoded with levels in sorted order. The minority
/// label becomes class 1. `positive_label`, when given, must occur in the
/// target column and decides the mapping only when both classes have the same
/// size.
pub fn load_csv(path: &Path, target_column: &str, positive_label: Option<&str>) -> Result<Dataset> {
    load_csv_report(path, target_column, positive_label).map(|(ds, _)| ds)
}

/// Row accounting from [`load_csv_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_read: usize,
    /// Rows dropped for a missing value or a wrong field count.
    pub rows_dropped: usize,
}

/// [`load_csv`] that also reports how many rows were dropped.
pub fn load_csv_report(path: &Path, target_column: &str, positive_label: Option<&str>) -> Result<(Dataset, LoadReport)> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.display().to_string()));
    }
    let io_err = |e: csv::Error| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(io_err)?;
    let header: Vec<String> = reader.headers().map_err(io_err)?.iter().map(str::to_string).collect();
    let target_idx = header
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| Error::MissingColumn(target_column.to_string()))?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut rows_read = 0;
    for record in reader.records() {
        let record = record.map_err(io_err)?;
        rows_read += 1;
        let cells: Vec<String> = record.iter().map(str::to_string).collect();
        if cells.len() != header.len() || cells.iter().any(|c| MISSING_TOKENS.contains(&c.as_str())) {
            continue;
        }
        rows.push(cells);
    }
    if rows.is_empty() {
        return Err(Error::EmptyAfterCleaning);
    }

    let mut label_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &rows {
        *label_counts.entry(r[target_idx].as_str()).or_default() += 1;
    }
    if label_counts.len() != 2 {
        return Err(Error::NonBinaryTarget(label_counts.len()));
    }
    if let Some(pos) = positive_label {
        if !label_counts.contains_key(pos) {
            return Err(Error::UnknownLabel(pos.to_string()));
        }
    }
    let counts: Vec<(&str, usize)> = label_counts.into_iter().collect();
    let ((la, ca), (lb, cb)) = (counts[0], counts[1]);
    let positive = if ca < cb {
        la
    } else if cb < ca {
        lb
    } else {
        positive_label.unwrap_or(lb)
    };
    let negative = if positive == la { lb } else { la };
    let positive = positive.to_string();
    let negative = negative.to_string();

    let n = rows.len();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut names = Vec::new();
    let mut kinds = Vec::new();
    for (j, name) in header.iter().enumerate() {
        if j == target_idx {
            continue;
        }
        let parsed: Option<Vec<f64>> = rows.iter().map(|r| r[j].parse::<f64>().ok()).collect();
        match parsed {
            Some(values) => {
                columns.push(values);
                names.push(name.clone());
                kinds.push(FeatureKind::Numeric);
            }
            None => {
                let levels: BTreeSet<&str> = rows.iter().map(|r| r[j].as_str()).collect();
                for level in levels {
                    columns.push(rows.iter().map(|r| f64::from(u8::from(r[j] == level))).collect());
                    names.push(format!("{name}={level}"));
                    kinds.push(FeatureKind::OneHot {
                        source: name.clone(),
                        level: level.to_string(),
                    });
                }
            }
        }
    }
    let p = columns.len();
    let features = Array2::from_shape_fn((n, p), |(i, j)| columns[j][i]);
    let labels = rows.iter().map(|r| u8::from(r[target_idx] == positive)).collect();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ds = Dataset {
        name,
        features,
        labels,
        feature_names: names,
        feature_kinds: kinds,
        positive_label: positive,
        negative_label: negative,
        row_ids: (0..n as u64).collect(),
    };
    Ok((ds, LoadReport { rows_read, rows_dropped: rows_read - n }))
}

pub fn class_stats(data: &Dataset) -> ClassStats {
    let n_minority = data.labels.iter().filter(|&&l| l == 1).count();
    let n_majority = data.n_rows() - n_minority;
    ClassStats {
        n: data.n_rows(),
        n_minority,
        n_majority,
        ir: n_majority.max(n_minority) as f64 / n_majority.min(n_minority) as f64,
    }
}

/// Stratified split: each class contributes round(test_fraction * n_c) rows to
/// the test part, clamped so both parts keep at least one row of each class.
pub fn stratified_split(data: &Dataset, test_fraction: f64, seed: u64) -> Result<SplitPair> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    let mut rng = seeded_rng(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [0u8, 1] {
        let mut idx = data.indices_of(class);
        if idx.len() < 2 {
            return Err(Error::TooFewPerClass { found: idx.len(), needed: 2 });
        }
        idx.shuffle(&mut rng);
        let n_test = ((test_fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        test.extend_from_slice(&idx[..n_test]);
        train.extend_from_slice(&idx[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitPair {
        train: data.subset(&train),
        test: data.subset(&test),
    })
}

/// Column means and population standard deviations.
pub fn column_moments(x: &Array2<f64>) -> (Vec<f64>, Vec<f64>) {
    let n = x.nrows().max(1) as f64;
    let mut means = vec![0.0; x.ncols()];
    let mut sds = vec![0.0; x.ncols()];
    for (j, col) in x.columns().into_iter().enumerate() {
        let m = col.sum() / n;
        let v = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
        means[j] = m;
        sds[j] = v.sqrt();
    }
    (means, sds)
}

/// Z-score every column; constant columns become all zero.
pub fn standardize(x: &Array2<f64>) -> Array2<f64> {
    let (means, sds) = column_moments(x);
    let mut out = x.clone();
    for (j, mut col) in out.columns_mut().into_iter().enumerate() {
        let sd = sds[j];
        col.mapv_inplace(|v| if sd > 0.0 { (v - means[j]) / sd } else { 0.0 });
    }
    out
}

pub fn scaled(x: &Array2<f64>, scaling: Scaling) -> Array2<f64> {
    match scaling {
        Scaling::Standardized => standardize(x),
        Scaling::Raw => x.clone(),
    }
}
