//! Tables and plot data derived from a results store.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use multiplicity_core::complexity::read_profiles_csv;
use multiplicity_core::filtering::FilterMode;
use multiplicity_core::stats::{
    dunn_posthoc, friedman, kruskal_wallis, spearman, spearman_exact, PAdjust, SpearmanResult, EXACT_SPEARMAN_LIMIT,
};
use multiplicity_core::{ComplexityProfile, Measure, Method};
use serde::Serialize;
use thiserror::Error;

use crate::runner::{read_store, ResultRecord, PROFILE_DIR};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("results store {0} holds no records")]
    EmptyStore(String),

    #[error("results store {0} holds no successful records")]
    NoSuccessfulRecords(String),

    #[error("no complexity profiles found in {0}")]
    NoProfiles(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportMode {
    /// Disagreement distributions per balancing method.
    Rq1,
    /// Performance gain against disagreement.
    Rq5,
    /// Complexity measures against disagreement.
    Rq6,
}

/// What one point in the complexity correlation stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum CorrelationUnit {
    /// Every successful grid cell.
    #[default]
    Record,
    /// One point per dataset, metrics averaged over its cells.
    Dataset,
}

#[derive(Debug, Clone)]
pub struct ReportOptions {
    pub mode: ReportMode,
    pub out_dir: Option<PathBuf>,
    pub profiles_dir: Option<PathBuf>,
    pub stats: bool,
    pub unit: CorrelationUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    Discrepancy,
    Obscurity,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Discrepancy, Metric::Obscurity];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Discrepancy => "discrepancy",
            Metric::Obscurity => "obscurity",
        }
    }

    pub fn of(self, r: &ResultRecord) -> Option<f64> {
        match self {
            Metric::Discrepancy => r.discrepancy,
            Metric::Obscurity => r.obscurity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionRow {
    pub balancing: String,
    pub metric: String,
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestRow {
    pub analysis: String,
    pub metric: String,
    pub test: String,
    pub statistic: Option<f64>,
    pub df: Option<f64>,
    pub p_value: Option<f64>,
    pub n: usize,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairRow {
    pub metric: String,
    pub group_a: String,
    pub group_b: String,
    pub z: f64,
    pub p_value: f64,
    pub p_adjusted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainRow {
    pub balancing: String,
    pub filtering: String,
    pub n: usize,
    pub median_gain: Option<f64>,
    pub mean_gain: Option<f64>,
    pub median_discrepancy: Option<f64>,
    pub median_obscurity: Option<f64>,
    pub rho_gain_discrepancy: Option<f64>,
    pub p_gain_discrepancy: Option<f64>,
    pub rho_gain_obscurity: Option<f64>,
    pub p_gain_obscurity: Option<f64>,
}

/// One measure's row of the complexity correlation table. `note` is `NA: ...`
/// when a correlation is undefined.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub measure: String,
    pub n: usize,
    pub obscurity_r: Option<f64>,
    pub obscurity_p: Option<f64>,
    pub discrepancy_r: Option<f64>,
    pub discrepancy_p: Option<f64>,
    pub note: String,
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(quantile(&v, 0.5))
}

fn distribution(balancing: &str, metric: Metric, values: &[f64]) -> DistributionRow {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    DistributionRow {
        balancing: balancing.to_string(),
        metric: metric.name().into(),
        n: v.len(),
        min: v[0],
        q1: quantile(&v, 0.25),
        median: quantile(&v, 0.5),
        q3: quantile(&v, 0.75),
        max: v[v.len() - 1],
        mean: v.iter().sum::<f64>() / v.len() as f64,
    }
}

/// Successful records' metric values grouped by balancing method, in method
/// order, skipping methods without values.
fn by_balancing<'a>(records: impl Iterator<Item = &'a ResultRecord>, metric: Metric) -> Vec<(Method, Vec<f64>)> {
    let mut groups: BTreeMap<Method, Vec<f64>> = BTreeMap::new();
    for r in records {
        if let Some(v) = metric.of(r) {
            groups.entry(r.balancing).or_default().push(v);
        }
    }
    groups.into_iter().collect()
}

fn test_row(analysis: &str, metric: &str, test: &str, result: multiplicity_core::Result<(f64, f64, f64, usize)>) -> TestRow {
    match result {
        Ok((statistic, df, p, n)) => TestRow {
            analysis: analysis.into(),
            metric: metric.into(),
            test: test.into(),
            statistic: Some(statistic),
            df: Some(df),
            p_value: Some(p),
            n,
            note: String::new(),
        },
        Err(e) => TestRow {
            analysis: analysis.into(),
            metric: metric.into(),
            test: test.into(),
            statistic: None,
            df: None,
            p_value: None,
            n: 0,
            note: format!("NA: {e}"),
        },
    }
}

fn kw_and_dunn(analysis: &str, groups: &[(Method, Vec<f64>)], metric: Metric) -> (TestRow, Vec<PairRow>) {
    let values: Vec<Vec<f64>> = groups.iter().map(|(_, v)| v.clone()).collect();
    let kw = test_row(
        analysis,
        metric.name(),
        "kruskal_wallis",
        kruskal_wallis(&values).map(|t| (t.statistic, t.df, t.p_value, t.n)),
    );
    let pairs = dunn_posthoc(&values, PAdjust::BenjaminiHochberg)
        .map(|cs| {
            cs.into_iter()
                .map(|c| PairRow {
                    metric: metric.name().into(),
                    group_a: groups[c.group_a].0.name().into(),
                    group_b: groups[c.group_b].0.name().into(),
                    z: c.z,
                    p_value: c.p_value,
                    p_adjusted: c.p_adjusted,
                })
                .collect()
        })
        .unwrap_or_default();
    (kw, pairs)
}

/// Balancing-only view: records with no filtering, one distribution row per
/// (balancing, metric), a Kruskal-Wallis row per metric and Dunn pairs.
pub fn rq1_tables(records: &[ResultRecord]) -> (Vec<DistributionRow>, Vec<TestRow>, Vec<PairRow>) {
    let mut dist = Vec::new();
    let mut tests = Vec::new();
    let mut pairs = Vec::new();
    for metric in Metric::ALL {
        let groups = by_balancing(records.iter().filter(|r| r.filtering == FilterMode::None), metric);
        for (m, v) in &groups {
            dist.push(distribution(m.name(), metric, v));
        }
        let (kw, dunn) = kw_and_dunn("rq1", &groups, metric);
        tests.push(kw);
        pairs.extend(dunn);
    }
    (dist, tests, pairs)
}

fn spearman_pair(x: &[f64], y: &[f64]) -> (Option<f64>, Option<f64>) {
    match spearman(x, y) {
        Ok(s) => (Some(s.rho), Some(s.p_value)),
        Err(_) => (None, None),
    }
}

pub fn rq5_table(records: &[ResultRecord]) -> Vec<GainRow> {
    let mut cells: BTreeMap<(Method, FilterMode), Vec<&ResultRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| !r.failed()) {
        cells.entry((r.balancing, r.filtering)).or_default().push(r);
    }
    cells
        .into_iter()
        .map(|((b, f), rs)| {
            let with_gain: Vec<&&ResultRecord> = rs.iter().filter(|r| r.performance_gain_vs_original.is_some()).collect();
            let gain: Vec<f64> = with_gain.iter().filter_map(|r| r.performance_gain_vs_original).collect();
            let disc: Vec<f64> = with_gain.iter().filter_map(|r| r.discrepancy).collect();
            let obsc: Vec<f64> = with_gain.iter().filter_map(|r| r.obscurity).collect();
            let (rd, pd) = spearman_pair(&gain, &disc);
            let (ro, po) = spearman_pair(&gain, &obsc);
            let all_d: Vec<f64> = rs.iter().filter_map(|r| r.discrepancy).collect();
            let all_o: Vec<f64> = rs.iter().filter_map(|r| r.obscurity).collect();
            GainRow {
                balancing: b.name().into(),
                filtering: f.name().into(),
                n: rs.len(),
                median_gain: median(&gain),
                mean_gain: (!gain.is_empty()).then(|| gain.iter().sum::<f64>() / gain.len() as f64),
                median_discrepancy: median(&all_d),
                median_obscurity: median(&all_o),
                rho_gain_discrepancy: rd,
                p_gain_discrepancy: pd,
                rho_gain_obscurity: ro,
                p_gain_obscurity: po,
            }
        })
        .collect()
}

/// Points for the complexity correlation: the dataset, its profile and the
/// (obscurity, discrepancy) pair, per record or averaged per dataset.
pub fn correlation_points<'a>(
    records: &[ResultRecord],
    profiles: &'a [ComplexityProfile],
    unit: CorrelationUnit,
) -> Vec<(&'a ComplexityProfile, f64, f64)> {
    let find = |name: &str| profiles.iter().find(|p| p.dataset_name == name);
    match unit {
        CorrelationUnit::Record => records
            .iter()
            .filter_map(|r| Some((find(&r.dataset)?, r.obscurity?, r.discrepancy?)))
            .collect(),
        CorrelationUnit::Dataset => {
            let mut acc: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
            for r in records {
                if let (Some(o), Some(d)) = (r.obscurity, r.discrepancy) {
                    let e = acc.entry(&r.dataset).or_default();
                    e.0 += o;
                    e.1 += d;
                    e.2 += 1;
                }
            }
            acc.into_iter()
                .filter_map(|(name, (o, d, n))| Some((find(name)?, o / n as f64, d / n as f64)))
                .collect()
        }
    }
}

fn rank_correlation(x: &[f64], y: &[f64]) -> multiplicity_core::Result<(SpearmanResult, bool)> {
    if x.len() <= EXACT_SPEARMAN_LIMIT {
        spearman_exact(x, y).map(|s| (s, true))
    } else {
        spearman(x, y).map(|s| (s, false))
    }
}

/// Spearman of each measure against obscurity and discrepancy. Small samples
/// get permutation p-values; constant or missing measures are flagged NA.
pub fn rq6_table(records: &[ResultRecord], profiles: &[ComplexityProfile], unit: CorrelationUnit) -> Vec<CorrelationRow> {
    let points = correlation_points(records, profiles, unit);
    Measure::ALL
        .iter()
        .map(|&m| {
            let usable: Vec<(f64, f64, f64)> =
                points.iter().filter_map(|(p, o, d)| Some((p.get(m)?, *o, *d))).collect();
            let x: Vec<f64> = usable.iter().map(|t| t.0).collect();
            let o: Vec<f64> = usable.iter().map(|t| t.1).collect();
            let d: Vec<f64> = usable.iter().map(|t| t.2).collect();
            let mut row = CorrelationRow {
                measure: m.name().into(),
                n: x.len(),
                obscurity_r: None,
                obscurity_p: None,
                discrepancy_r: None,
                discrepancy_p: None,
                note: String::new(),
            };
            let mut notes = Vec::new();
            if x.len() < points.len() {
                notes.push(format!("{} points without a value", points.len() - x.len()));
            }
            if x.len() >= 2 && x.iter().all(|&v| v == x[0]) {
                row.note = "NA: constant measure".into();
                return row;
            }
            for (target, r, p, label) in [
                (&o, &mut row.obscurity_r, &mut row.obscurity_p, "obscurity"),
                (&d, &mut row.discrepancy_r, &mut row.discrepancy_p, "discrepancy"),
            ] {
                match rank_correlation(&x, target) {
                    Ok((s, exact)) => {
                        *r = Some(s.rho);
                        *p = Some(s.p_value);
                        if exact && label == "obscurity" {
                            notes.push("exact permutation p".into());
                        }
                    }
                    Err(e) => notes.push(format!("NA {label}: {e}")),
                }
            }
            row.note = notes.join("; ");
            row
        })
        .collect()
}

/// Friedman across balancing methods with (dataset, repeat, filtering) blocks;
/// blocks missing any method are dropped.
pub fn friedman_rows(records: &[ResultRecord]) -> Vec<TestRow> {
    let methods: Vec<Method> = {
        let mut m: Vec<Method> = records.iter().map(|r| r.balancing).collect();
        m.sort();
        m.dedup();
        m
    };
    Metric::ALL
        .iter()
        .map(|&metric| {
            let mut blocks: BTreeMap<(&str, usize, FilterMode), BTreeMap<Method, f64>> = BTreeMap::new();
            for r in records {
                if let Some(v) = metric.of(r) {
                    blocks.entry((&r.dataset, r.repeat, r.filtering)).or_default().insert(r.balancing, v);
                }
            }
            let total = blocks.len();
            let complete: Vec<Vec<f64>> = blocks
                .into_values()
                .filter(|b| b.len() == methods.len())
                .map(|b| b.into_values().collect())
                .collect();
            let dropped = total - complete.len();
            let mut row = test_row(
                "stats",
                metric.name(),
                "friedman",
                friedman(&complete).map(|t| (t.statistic, t.df, t.p_value, t.n)),
            );
            if dropped > 0 {
                row.note = format!("{dropped} incomplete blocks dropped {}", row.note).trim().to_string();
            }
            row
        })
        .collect()
}

fn stats_battery(records: &[ResultRecord]) -> (Vec<TestRow>, Vec<PairRow>) {
    let mut tests = Vec::new();
    let mut pairs = Vec::new();
    for metric in Metric::ALL {
        let groups = by_balancing(records.iter(), metric);
        let (kw, dunn) = kw_and_dunn("stats", &groups, metric);
        tests.push(kw);
        pairs.extend(dunn);
    }
    tests.extend(friedman_rows(records));
    for metric in Metric::ALL {
        let pts: Vec<(f64, f64)> = records
            .iter()
            .filter_map(|r| Some((r.performance_gain_vs_original?, metric.of(r)?)))
            .collect();
        let (g, v): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        tests.push(test_row(
            "stats",
            &format!("gain~{}", metric.name()),
            "spearman",
            spearman(&g, &v).map(|s| (s.rho, (s.n as f64) - 2.0, s.p_value, s.n)),
        ));
    }
    (tests, pairs)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct MetricPoint<'a> {
    dataset: &'a str,
    balancing: &'a str,
    filtering: &'a str,
    repeat: usize,
    discrepancy: f64,
    obscurity: f64,
    performance_gain: Option<f64>,
}

fn metric_points(records: &[ResultRecord], keep: impl Fn(&ResultRecord) -> bool) -> Vec<MetricPoint<'_>> {
    records
        .iter()
        .filter(|r| keep(r))
        .filter_map(|r| {
            Some(MetricPoint {
                dataset: &r.dataset,
                balancing: r.balancing.name(),
                filtering: r.filtering.name(),
                repeat: r.repeat,
                discrepancy: r.discrepancy?,
                obscurity: r.obscurity?,
                performance_gain: r.performance_gain_vs_original,
            })
        })
        .collect()
}

/// Every profile in the CSV files of a directory, sorted by dataset name.
pub fn load_profiles(dir: &Path) -> Result<Vec<ComplexityProfile>> {
    let mut out = Vec::new();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .collect();
    paths.sort();
    for p in paths {
        out.extend(read_profiles_csv(File::open(&p)?).with_context(|| format!("reading {}", p.display()))?);
    }
    out.sort_by(|a, b| a.dataset_name.cmp(&b.dataset_name));
    Ok(out)
}

/// Write the report files for `mode` and return their paths.
pub fn report(store: &Path, opts: &ReportOptions) -> Result<Vec<PathBuf>> {
    let records = read_store(store)?;
    if records.is_empty() {
        return Err(ReportError::EmptyStore(store.display().to_string()).into());
    }
    if records.iter().all(ResultRecord::failed) {
        return Err(ReportError::NoSuccessfulRecords(store.display().to_string()).into());
    }
    let base = store.parent().unwrap_or_else(|| Path::new("."));
    let out = opts.out_dir.clone().unwrap_or_else(|| base.join("reports"));
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let mut written = Vec::new();
    let mut emit = |name: &str, f: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
        let p = out.join(name);
        f(&p)?;
        written.push(p);
        Ok(())
    };

    match opts.mode {
        ReportMode::Rq1 => {
            let (dist, tests, pairs) = rq1_tables(&records);
            emit("rq1_distributions.csv", &|p| write_csv(p, &dist))?;
            emit("rq1_tests.csv", &|p| write_csv(p, &tests))?;
            emit("rq1_dunn.csv", &|p| write_csv(p, &pairs))?;
            let pts = metric_points(&records, |r| r.filtering == FilterMode::None);
            emit("rq1_points.csv", &|p| write_csv(p, &pts))?;
        }
        ReportMode::Rq5 => {
            let table = rq5_table(&records);
            emit("rq5_gain.csv", &|p| write_csv(p, &table))?;
            let pts = metric_points(&records, |_| true);
            emit("rq5_points.csv", &|p| write_csv(p, &pts))?;
        }
        ReportMode::Rq6 => {
            let dir = opts.profiles_dir.clone().unwrap_or_else(|| base.join(PROFILE_DIR));
            let profiles = load_profiles(&dir)?;
            if profiles.is_empty() {
                return Err(ReportError::NoProfiles(dir.display().to_string()).into());
            }
            let table = rq6_table(&records, &profiles, opts.unit);
            emit("rq6_correlations.csv", &|p| write_csv(p, &table))?;
            let pts = correlation_points(&records, &profiles, opts.unit);
            emit("rq6_points.csv", &|p| {
                let mut w = csv::Writer::from_path(p)?;
                let mut header = vec!["dataset".to_string()];
                header.extend(Measure::ALL.iter().map(|m| m.name().to_string()));
                header.extend(["obscurity".into(), "discrepancy".into()]);
                w.write_record(&header)?;
                for (prof, o, d) in &pts {
                    let mut row = vec![prof.dataset_name.clone()];
                    row.extend(prof.values().iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
                    row.extend([o.to_string(), d.to_string()]);
                    w.write_record(&row)?;
                }
                w.flush()?;
                Ok(())
            })?;
        }
    }
    if opts.stats {
        let (tests, pairs) = stats_battery(&records);
        emit("stats_tests.csv", &|p| write_csv(p, &tests))?;
        emit("stats_dunn.csv", &|p| write_csv(p, &pairs))?;
    }
    Ok(written)
}
