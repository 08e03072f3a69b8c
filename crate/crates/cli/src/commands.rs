//! Single-dataset commands. Each reads a CSV and writes its result to a sink.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use multiplicity_core::complexity::{cluster_datasets, write_profiles_csv};
use multiplicity_core::filtering::{select_features, write_records, FilterMode, FilterSpec};
use multiplicity_core::rashomon::{auc, multiplicity_report};
use multiplicity_core::{
    balance, build_rashomon_set, class_stats, complexity_profile, load_csv_report, prediction_matrix,
    stratified_split, train_pool, BalanceSpec, ComplexityOptions, Dataset, LossKind, Method, Provenance, Scaling,
};
use serde::Serialize;

use crate::report::load_profiles;

/// Load a CSV, reporting dropped rows on stderr.
pub fn load(path: &Path, target: &str, positive: Option<&str>) -> Result<Dataset> {
    let (ds, report) =
        load_csv_report(path, target, positive).with_context(|| format!("loading {}", path.display()))?;
    if report.rows_dropped > 0 {
        eprintln!("dropped {} of {} rows with missing values", report.rows_dropped, report.rows_read);
    }
    Ok(ds)
}

pub fn complexity(data: &Dataset, seed: u64, out: impl Write) -> Result<()> {
    let profile = complexity_profile(data, seed, &ComplexityOptions::default())?;
    for reason in &profile.na_reasons {
        eprintln!("NA: {reason}");
    }
    write_profiles_csv(std::slice::from_ref(&profile), out)?;
    Ok(())
}

/// Write a dataset as CSV with the label column last, using source labels.
pub fn write_dataset(data: &Dataset, target: &str, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = data.feature_names.clone();
    header.push(target.to_string());
    w.write_record(&header)?;
    for i in 0..data.n_rows() {
        let mut row: Vec<String> = data.row(i).iter().map(f64::to_string).collect();
        row.push(if data.labels[i] == 1 { data.positive_label.clone() } else { data.negative_label.clone() });
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub struct BalanceArgs {
    pub method: Method,
    pub k: usize,
    pub ratio: f64,
    pub seed: u64,
    pub raw: bool,
}

/// Balance and write the result; returns (rows before, rows after, IR after).
pub fn balance_csv(data: &Dataset, target: &str, args: &BalanceArgs, out: impl Write) -> Result<(usize, usize, f64)> {
    let spec = BalanceSpec {
        method: args.method,
        k: args.k,
        target_ratio: args.ratio,
        seed: args.seed,
        scaling: if args.raw { Scaling::Raw } else { Scaling::Standardized },
    };
    let outcome = balance(data, &spec)?;
    let synthetic = outcome.provenance.iter().filter(|p| matches!(p, Provenance::Synthetic { .. })).count();
    let duplicated = outcome.provenance.iter().filter(|p| matches!(p, Provenance::Duplicate { .. })).count();
    eprintln!(
        "{}: {} duplicated, {} synthetic, {} removed",
        args.method,
        duplicated,
        synthetic,
        outcome.removed.len()
    );
    write_dataset(&outcome.data, target, out)?;
    Ok((data.n_rows(), outcome.data.n_rows(), class_stats(&outcome.data).ir))
}

/// Run the feature tests and write one record per feature; returns the
/// selected column names.
pub fn filter_csv(data: &Dataset, mode: FilterMode, alpha: f64, out: impl Write) -> Result<Vec<String>> {
    let set = select_features(data, FilterSpec { mode, alpha })?;
    write_records(&set.records, out)?;
    Ok(set.indices.iter().map(|&j| data.feature_names[j].clone()).collect())
}

pub struct RashomonArgs {
    pub pool: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub loss: LossKind,
    pub test_fraction: f64,
    pub validation_fraction: f64,
    pub include_reference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RashomonSummary {
    pub pool_size: usize,
    pub epsilon: f64,
    pub loss: String,
    pub reference_index: usize,
    pub reference_family: String,
    pub reference_loss: f64,
    pub auc_reference: f64,
    pub n_members: usize,
    pub member_indices: Vec<usize>,
    pub discrepancy: f64,
    pub obscurity: f64,
    pub n_test: usize,
}

/// Split, train a pool on the fitting rows, select the set on the validation
/// rows and measure disagreement on the test rows.
pub fn rashomon(data: &Dataset, args: &RashomonArgs) -> Result<RashomonSummary> {
    let split = stratified_split(data, args.test_fraction, args.seed)?;
    let carve = stratified_split(&split.train, args.validation_fraction, args.seed.wrapping_add(1))?;
    let pool = train_pool(&carve.train, args.pool, args.seed)?;
    let rset = build_rashomon_set(pool, &carve.test, args.epsilon, args.loss)?;
    let pm = prediction_matrix(&rset, &split.test)?;
    let rep = multiplicity_report(&pm, args.epsilon, args.include_reference);
    Ok(RashomonSummary {
        pool_size: args.pool,
        epsilon: args.epsilon,
        loss: args.loss.to_string(),
        reference_index: rset.reference_index,
        reference_family: rset.reference().spec.family.name().into(),
        reference_loss: rset.losses[rset.reference_index],
        auc_reference: auc(&rset.reference().scores(&split.test.features), &split.test.labels)?,
        n_members: rset.n_members(),
        member_indices: rset.member_indices.clone(),
        discrepancy: rep.discrepancy,
        obscurity: rep.obscurity,
        n_test: split.test.n_rows(),
    })
}

/// Cluster the profiles found in a directory and write `dataset,cluster`.
pub fn cluster(profiles_dir: &Path, k: usize, seed: u64, out: impl Write) -> Result<()> {
    let profiles = load_profiles(profiles_dir)?;
    let assignment = cluster_datasets(&profiles, k, seed)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["dataset", "cluster"])?;
    for (name, c) in assignment.dataset_names.iter().zip(&assignment.clusters) {
        w.write_record([name.as_str(), &c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
