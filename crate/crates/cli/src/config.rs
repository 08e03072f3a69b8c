//! Experiment configuration read from a TOML file.
//!
//! ```toml
//! master_seed = 42
//! repeats = 2
//! balancing = ["smote", "adasyn"]   # `none` is always added
//! filtering = ["sig"]               # `none` is always added
//! output_dir = "results"
//!
//! [[datasets]]
//! name = "spambase"
//! path = "data/spambase.csv"
//! target = "class"
//! ```
//!
//! Relative paths are resolved against the directory holding the config file.

use std::path::{Path, PathBuf};

use multiplicity_core::filtering::FilterMode;
use multiplicity_core::rashomon::{LossKind, DEFAULT_EPSILON, DEFAULT_POOL_SIZE};
use multiplicity_core::Method;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Read { path: String, message: String },

    #[error("malformed config: {0}")]
    Parse(String),

    #[error("unknown key `{key}`{}", suggestion.as_ref().map(|s| format!(", did you mean `{s}`?")).unwrap_or_default())]
    UnknownKey { key: String, suggestion: Option<String> },

    #[error("dataset entry invalid: {0}")]
    MissingDataset(String),

    #[error("invalid value: {0}")]
    Invalid(String),

    #[error("dataset `{name}` cannot be loaded: {message}")]
    Dataset { name: String, message: String },
}

/// When the filter runs relative to balancing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineOrder {
    /// Filter on the training partition, then balance the fitting rows.
    #[default]
    FilterFirst,
    /// Balance the fitting rows, then run the filter tests on the balanced data.
    BalanceFirst,
}

impl PipelineOrder {
    pub fn name(self) -> &'static str {
        match self {
            PipelineOrder::FilterFirst => "filter_first",
            PipelineOrder::BalanceFirst => "balance_first",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub name: String,
    pub path: PathBuf,
    pub target: String,
    pub positive: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetEntry>,
    /// Always starts with `none`.
    pub balancing: Vec<Method>,
    /// Always starts with `none`.
    pub filtering: Vec<FilterMode>,
    pub epsilon: f64,
    pub pool_size: usize,
    pub target_ratio: f64,
    pub test_fraction: f64,
    pub master_seed: u64,
    pub repeats: usize,
    pub output_dir: PathBuf,

    pub k: usize,
    pub alpha: f64,
    pub loss: LossKind,
    /// Share of the training partition held out to score the pool.
    pub validation_fraction: f64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub include_reference: bool,
    pub order: PipelineOrder,
    /// Number of complexity clusters assigned to datasets.
    pub clusters: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    name: Option<String>,
    path: Option<PathBuf>,
    target: Option<String>,
    positive: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    datasets: Option<Vec<RawDataset>>,
    balancing: Option<Vec<String>>,
    filtering: Option<Vec<String>>,
    epsilon: Option<f64>,
    pool_size: Option<usize>,
    target_ratio: Option<f64>,
    test_fraction: Option<f64>,
    master_seed: Option<u64>,
    repeats: Option<usize>,
    output_dir: Option<PathBuf>,
    k: Option<usize>,
    alpha: Option<f64>,
    loss: Option<String>,
    validation_fraction: Option<f64>,
    workers: Option<usize>,
    include_reference: Option<bool>,
    order: Option<PipelineOrder>,
    clusters: Option<usize>,
}

pub const TOP_LEVEL_KEYS: [&str; 18] = [
    "datasets",
    "balancing",
    "filtering",
    "epsilon",
    "pool_size",
    "target_ratio",
    "test_fraction",
    "master_seed",
    "repeats",
    "output_dir",
    "k",
    "alpha",
    "loss",
    "validation_fraction",
    "workers",
    "include_reference",
    "order",
    "clusters",
];
pub const DATASET_KEYS: [&str; 4] = ["name", "path", "target", "positive"];

fn closest(key: &str, known: &[&str]) -> Option<String> {
    known
        .iter()
        .map(|k| (strsim::damerau_levenshtein(key, k), *k))
        .filter(|(d, k)| *d <= 2.max(k.len() / 3))
        .min()
        .map(|(_, k)| k.to_string())
}

fn check_keys(table: &toml::Table, known: &[&str], prefix: &str) -> Result<(), ConfigError> {
    for key in table.keys() {
        if !known.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey {
                key: format!("{prefix}{key}"),
                suggestion: closest(key, known).map(|s| format!("{prefix}{s}")),
            });
        }
    }
    Ok(())
}

/// Read and validate a config file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config_str(&text, base)
}

/// Parse config text; relative paths are resolved against `base`.
pub fn parse_config_str(text: &str, base: &Path) -> Result<ExperimentConfig, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.message().to_string()))?;
    check_keys(&table, &TOP_LEVEL_KEYS, "")?;
    if let Some(toml::Value::Array(items)) = table.get("datasets") {
        for item in items {
            if let toml::Value::Table(t) = item {
                check_keys(t, &DATASET_KEYS, "datasets.")?;
            }
        }
    }
    let raw: RawConfig = table.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.message().to_string()))?;

    let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };
    let raw_sets = raw.datasets.unwrap_or_default();
    if raw_sets.is_empty() {
        return Err(ConfigError::MissingDataset("at least one [[datasets]] entry is required".into()));
    }
    let mut datasets = Vec::with_capacity(raw_sets.len());
    for (i, d) in raw_sets.into_iter().enumerate() {
        let path = d.path.ok_or_else(|| ConfigError::MissingDataset(format!("datasets[{i}] has no `path`")))?;
        let target = d.target.ok_or_else(|| ConfigError::MissingDataset(format!("datasets[{i}] has no `target`")))?;
        let name = d.name.unwrap_or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default());
        if datasets.iter().any(|e: &DatasetEntry| e.name == name) {
            return Err(ConfigError::MissingDataset(format!("dataset name `{name}` appears twice")));
        }
        datasets.push(DatasetEntry { name, path: resolve(path), target, positive: d.positive });
    }

    let balancing = with_none(raw.balancing.unwrap_or_default(), Method::None)?;
    let filtering = with_none(raw.filtering.unwrap_or_default(), FilterMode::None)?;
    let loss = match raw.loss {
        Some(s) => s.parse().map_err(|e: multiplicity_core::Error| ConfigError::Invalid(e.to_string()))?,
        None => LossKind::default(),
    };

    let cfg = ExperimentConfig {
        datasets,
        balancing,
        filtering,
        epsilon: raw.epsilon.unwrap_or(DEFAULT_EPSILON),
        pool_size: raw.pool_size.unwrap_or(DEFAULT_POOL_SIZE),
        target_ratio: raw.target_ratio.unwrap_or(1.0),
        test_fraction: raw.test_fraction.unwrap_or(0.25),
        master_seed: raw.master_seed.unwrap_or(0),
        repeats: raw.repeats.unwrap_or(1),
        output_dir: resolve(raw.output_dir.unwrap_or_else(|| PathBuf::from("results"))),
        k: raw.k.unwrap_or(5),
        alpha: raw.alpha.unwrap_or(0.05),
        loss,
        validation_fraction: raw.validation_fraction.unwrap_or(0.2),
        workers: raw.workers.unwrap_or(0),
        include_reference: raw.include_reference.unwrap_or(false),
        order: raw.order.unwrap_or_default(),
        clusters: raw.clusters.unwrap_or(3),
    };
    validate(&cfg)?;
    Ok(cfg)
}

/// Parse names, put `none` first and drop repeats while keeping order.
fn with_none<T>(names: Vec<String>, none: T) -> Result<Vec<T>, ConfigError>
where
    T: std::str::FromStr + PartialEq + Copy,
    T::Err: std::fmt::Display,
{
    let mut out = vec![none];
    for n in names {
        let v: T = n.parse().map_err(|e: T::Err| ConfigError::Invalid(e.to_string()))?;
        if !out.contains(&v) {
            out.push(v);
        }
    }
    Ok(out)
}

fn validate(c: &ExperimentConfig) -> Result<(), ConfigError> {
    let bad = |m: String| Err(ConfigError::Invalid(m));
    if !(c.epsilon >= 0.0 && c.epsilon.is_finite()) {
        return bad(format!("epsilon must be >= 0, got {}", c.epsilon));
    }
    if c.repeats < 1 {
        return bad("repeats must be at least 1".into());
    }
    if c.pool_size < 2 {
        return bad(format!("pool_size must be at least 2, got {}", c.pool_size));
    }
    if !(c.target_ratio >= 1.0 && c.target_ratio.is_finite()) {
        return bad(format!("target_ratio must be >= 1, got {}", c.target_ratio));
    }
    for (key, v) in [("test_fraction", c.test_fraction), ("validation_fraction", c.validation_fraction)] {
        if !(v > 0.0 && v < 1.0) {
            return bad(format!("{key} must lie strictly between 0 and 1, got {v}"));
        }
    }
    if !(c.alpha > 0.0 && c.alpha < 1.0) {
        return bad(format!("alpha must lie strictly between 0 and 1, got {}", c.alpha));
    }
    if c.k == 0 {
        return bad("k must be at least 1".into());
    }
    if c.clusters == 0 {
        return bad("clusters must be at least 1".into());
    }
    Ok(())
}

impl ExperimentConfig {
    /// Number of grid cells, `none` conditions included.
    pub fn n_cells(&self) -> usize {
        self.datasets.len() * self.balancing.len() * self.filtering.len() * self.repeats
    }
}
