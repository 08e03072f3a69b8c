//! Runs the dataset x balancing x filtering x repeat grid.
//!
//! Each (dataset, repeat) group shares one train/test split, one validation
//! carve-out and one pool seed, so cells in a group differ only by their
//! preprocessing. Groups are written to the JSON-lines store in grid order as
//! they finish.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use multiplicity_core::complexity::{cluster_datasets, write_profiles_csv};
use multiplicity_core::filtering::{select_features, FilterMode, FilterSpec};
use multiplicity_core::rashomon::{auc, multiplicity_report};
use multiplicity_core::{
    balance, build_rashomon_set, complexity_profile, load_csv_report, prediction_matrix, stratified_split, train_pool,
    BalanceSpec, ComplexityOptions, ComplexityProfile, Dataset, Method, Scaling,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ConfigError, ExperimentConfig, PipelineOrder};

pub const STORE_FILE: &str = "results.jsonl";
pub const PROFILE_DIR: &str = "profiles";
pub const CLUSTER_FILE: &str = "clusters.csv";

/// One grid cell. Metric fields are `None` when the cell failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub dataset: String,
    #[serde(with = "by_name")]
    pub balancing: Method,
    #[serde(with = "by_name")]
    pub filtering: FilterMode,
    pub repeat: usize,
    pub seed: u64,
    pub order: PipelineOrder,
    pub epsilon: f64,
    pub n_rashomon_members: Option<usize>,
    pub auc_reference: Option<f64>,
    pub discrepancy: Option<f64>,
    pub obscurity: Option<f64>,
    /// AUC of this cell's reference minus that of the none/none cell.
    pub performance_gain_vs_original: Option<f64>,
    pub complexity_cluster: Option<usize>,
    pub n_train_rows: Option<usize>,
    pub n_features_selected: Option<usize>,
    pub reference_index: Option<usize>,
    /// Validation loss of every pool model, by pool index.
    pub validation_losses: Vec<f64>,
    pub member_indices: Vec<usize>,
    pub error: Option<String>,
    /// Seconds; the only field allowed to differ between reruns.
    pub wall_time: f64,
}

/// Store enums under the names used in configs and on the command line.
mod by_name {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

impl ResultRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    pub fn is_baseline(&self) -> bool {
        self.balancing == Method::None && self.filtering == FilterMode::None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub store: PathBuf,
    pub n_records: usize,
    pub n_failed: usize,
    pub profiles: Vec<ComplexityProfile>,
}

/// First eight bytes of SHA-256 over the `|`-joined parts.
pub fn stable_seed(parts: &[&str]) -> u64 {
    let digest = Sha256::digest(parts.join("|").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub fn cell_seed(master: u64, dataset: &str, balancing: Method, filtering: FilterMode, repeat: usize) -> u64 {
    stable_seed(&["cell", &master.to_string(), dataset, balancing.name(), filtering.name(), &repeat.to_string()])
}

/// Seeds shared by every cell of a (dataset, repeat) group.
#[derive(Debug, Clone, Copy)]
struct GroupSeeds {
    split: u64,
    validation: u64,
    pool: u64,
}

fn group_seeds(master: u64, dataset: &str, repeat: usize) -> GroupSeeds {
    let m = master.to_string();
    let r = repeat.to_string();
    GroupSeeds {
        split: stable_seed(&["split", &m, dataset, &r]),
        validation: stable_seed(&["validation", &m, dataset, &r]),
        pool: stable_seed(&["pool", &m, dataset, &r]),
    }
}

struct CellOutcome {
    n_members: usize,
    auc_reference: f64,
    discrepancy: f64,
    obscurity: f64,
    n_train_rows: usize,
    n_features: usize,
    reference_index: usize,
    losses: Vec<f64>,
    members: Vec<usize>,
}

fn filter_columns(data: &Dataset, mode: FilterMode, alpha: f64) -> multiplicity_core::Result<Vec<usize>> {
    if mode == FilterMode::None {
        return Ok((0..data.n_features()).collect());
    }
    Ok(select_features(data, FilterSpec { mode, alpha })?.indices)
}

fn run_cell(
    cfg: &ExperimentConfig,
    train: &Dataset,
    test: &Dataset,
    seeds: GroupSeeds,
    balancing: Method,
    filtering: FilterMode,
    seed: u64,
) -> multiplicity_core::Result<CellOutcome> {
    let carve = stratified_split(train, cfg.validation_fraction, seeds.validation)?;
    let spec = BalanceSpec {
        method: balancing,
        k: cfg.k,
        target_ratio: cfg.target_ratio,
        seed,
        scaling: Scaling::Standardized,
    };
    let (fit, val, test) = match cfg.order {
        PipelineOrder::FilterFirst => {
            let cols = filter_columns(train, filtering, cfg.alpha)?;
            let fit = balance(&carve.train.select_columns(&cols), &spec)?.data;
            (fit, carve.test.select_columns(&cols), test.select_columns(&cols))
        }
        PipelineOrder::BalanceFirst => {
            let balanced = balance(&carve.train, &spec)?.data;
            let cols = filter_columns(&balanced, filtering, cfg.alpha)?;
            (balanced.select_columns(&cols), carve.test.select_columns(&cols), test.select_columns(&cols))
        }
    };
    let pool = train_pool(&fit, cfg.pool_size, seeds.pool)?;
    let rset = build_rashomon_set(pool, &val, cfg.epsilon, cfg.loss)?;
    let auc_reference = auc(&rset.reference().scores(&test.features), &test.labels)?;
    let pm = prediction_matrix(&rset, &test)?;
    let report = multiplicity_report(&pm, cfg.epsilon, cfg.include_reference);
    Ok(CellOutcome {
        n_members: rset.n_members(),
        auc_reference,
        discrepancy: report.discrepancy,
        obscurity: report.obscurity,
        n_train_rows: fit.n_rows(),
        n_features: fit.n_features(),
        reference_index: rset.reference_index,
        losses: rset.losses,
        members: rset.member_indices,
    })
}

fn run_group(cfg: &ExperimentConfig, data: &Dataset, repeat: usize, cluster: Option<usize>) -> Vec<ResultRecord> {
    let seeds = group_seeds(cfg.master_seed, &data.name, repeat);
    let split = stratified_split(data, cfg.test_fraction, seeds.split);
    let cells: Vec<(Method, FilterMode)> = cfg
        .balancing
        .iter()
        .flat_map(|&b| cfg.filtering.iter().map(move |&f| (b, f)))
        .collect();
    let mut records: Vec<ResultRecord> = cells
        .par_iter()
        .map(|&(balancing, filtering)| {
            let seed = cell_seed(cfg.master_seed, &data.name, balancing, filtering, repeat);
            let started = Instant::now();
            let outcome = split
                .as_ref()
                .map_err(|e| e.to_string())
                .and_then(|s| run_cell(cfg, &s.train, &s.test, seeds, balancing, filtering, seed).map_err(|e| e.to_string()));
            let mut rec = ResultRecord {
                dataset: data.name.clone(),
                balancing,
                filtering,
                repeat,
                seed,
                order: cfg.order,
                epsilon: cfg.epsilon,
                n_rashomon_members: None,
                auc_reference: None,
                discrepancy: None,
                obscurity: None,
                performance_gain_vs_original: None,
                complexity_cluster: cluster,
                n_train_rows: None,
                n_features_selected: None,
                reference_index: None,
                validation_losses: Vec::new(),
                member_indices: Vec::new(),
                error: None,
                wall_time: 0.0,
            };
            match outcome {
                Ok(o) => {
                    rec.n_rashomon_members = Some(o.n_members);
                    rec.auc_reference = Some(o.auc_reference);
                    rec.discrepancy = Some(o.discrepancy);
                    rec.obscurity = Some(o.obscurity);
                    rec.n_train_rows = Some(o.n_train_rows);
                    rec.n_features_selected = Some(o.n_features);
                    rec.reference_index = Some(o.reference_index);
                    rec.validation_losses = o.losses;
                    rec.member_indices = o.members;
                }
                Err(e) => rec.error = Some(e),
            }
            rec.wall_time = started.elapsed().as_secs_f64();
            rec
        })
        .collect();
    let baseline = records.iter().find(|r| r.is_baseline()).and_then(|r| r.auc_reference);
    for r in &mut records {
        r.performance_gain_vs_original = match (r.auc_reference, baseline) {
            (Some(a), Some(b)) => Some(a - b),
            _ => None,
        };
    }
    records
}

fn load_datasets(cfg: &ExperimentConfig) -> Result<Vec<Dataset>, ConfigError> {
    cfg.datasets
        .iter()
        .map(|d| {
            let (mut ds, report) = load_csv_report(&d.path, &d.target, d.positive.as_deref())
                .map_err(|e| ConfigError::Dataset { name: d.name.clone(), message: e.to_string() })?;
            if report.rows_dropped > 0 {
                eprintln!("{}: dropped {} of {} rows with missing values", d.name, report.rows_dropped, report.rows_read);
            }
            ds.name = d.name.clone();
            Ok(ds)
        })
        .collect()
}

/// Profiles of every dataset on its full data, written one CSV per dataset.
/// A dataset whose profile fails is reported and left out of clustering.
fn profile_all(datasets: &[Dataset], seed: u64, dir: &Path) -> Result<Vec<ComplexityProfile>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let opts = ComplexityOptions::default();
    let mut out = Vec::new();
    for ds in datasets {
        match complexity_profile(ds, seed, &opts) {
            Ok(p) => {
                let path = dir.join(format!("{}.csv", ds.name));
                write_profiles_csv(std::slice::from_ref(&p), File::create(&path)?)
                    .with_context(|| format!("writing {}", path.display()))?;
                out.push(p);
            }
            Err(e) => eprintln!("{}: complexity profile failed: {e}", ds.name),
        }
    }
    Ok(out)
}

fn assign_clusters(cfg: &ExperimentConfig, profiles: &[ComplexityProfile]) -> Result<BTreeMap<String, usize>> {
    let mut map = BTreeMap::new();
    if profiles.len() < cfg.clusters {
        return Ok(map);
    }
    let assignment = cluster_datasets(profiles, cfg.clusters, cfg.master_seed)?;
    let path = cfg.output_dir.join(CLUSTER_FILE);
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(["dataset", "cluster"])?;
    for (name, &c) in assignment.dataset_names.iter().zip(&assignment.clusters) {
        w.write_record([name.as_str(), &c.to_string()])?;
        map.insert(name.clone(), c);
    }
    w.flush()?;
    Ok(map)
}

pub fn read_store(path: &Path) -> Result<Vec<ResultRecord>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?);
    }
    Ok(out)
}

/// (dataset, repeat) groups already complete in an existing store.
fn finished_groups(cfg: &ExperimentConfig, store: &Path) -> Result<BTreeSet<(String, usize)>> {
    let per_group = cfg.balancing.len() * cfg.filtering.len();
    let mut counts: BTreeMap<(String, usize), usize> = BTreeMap::new();
    for r in read_store(store)? {
        *counts.entry((r.dataset, r.repeat)).or_default() += 1;
    }
    Ok(counts.into_iter().filter(|(_, c)| *c == per_group).map(|(k, _)| k).collect())
}

/// Run the grid. With `resume`, groups already complete in the store are
/// kept and skipped; otherwise the store is started afresh.
pub fn run_experiment(cfg: &ExperimentConfig, resume: bool) -> Result<RunSummary> {
    let datasets = load_datasets(cfg)?;
    fs::create_dir_all(&cfg.output_dir).with_context(|| format!("creating {}", cfg.output_dir.display()))?;
    let store = cfg.output_dir.join(STORE_FILE);

    let threads = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build()?;
    threads.install(|| {
        let profiles = profile_all(&datasets, cfg.master_seed, &cfg.output_dir.join(PROFILE_DIR))?;
        let clusters = assign_clusters(cfg, &profiles)?;

        let done = if resume && store.exists() { finished_groups(cfg, &store)? } else { BTreeSet::new() };
        if !resume || !store.exists() {
            File::create(&store).with_context(|| format!("creating {}", store.display()))?;
        }
        for ds in &datasets {
            for repeat in 0..cfg.repeats {
                if done.contains(&(ds.name.clone(), repeat)) {
                    continue;
                }
                let records = run_group(cfg, ds, repeat, clusters.get(&ds.name).copied());
                let mut w = BufWriter::new(OpenOptions::new().append(true).open(&store)?);
                for r in &records {
                    serde_json::to_writer(&mut w, r)?;
                    w.write_all(b"\n")?;
                    if let Some(e) = &r.error {
                        eprintln!("{} {}/{} repeat {}: {e}", r.dataset, r.balancing, r.filtering, r.repeat);
                    }
                }
                w.flush()?;
            }
        }
        let all = read_store(&store)?;
        let n_failed = all.iter().filter(|r| r.failed()).count();
        Ok(RunSummary { store: store.clone(), n_records: all.len(), n_failed, profiles })
    })
}
