//! Data-complexity measures and complexity-based clustering of datasets.
//!
//! Seventeen measures in four families: dimensionality (t2, t3, t4), linearity
//! (l1, l2, l3), feature overlap (f1, f1v, f2, f3, f4) and neighbourhood
//! structure (n1, n2, n3, n4, t1, lsc). Values follow the value-table
//! orientation: ratios are p/n, f1 is 1/(1 + max Fisher ratio), lsc is
//! normalized to [0, 1].

mod cluster;
mod dimensionality;
mod linearity;
mod neighborhood;
mod overlap;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{class_stats, Dataset, Scaling};
use crate::error::{Error, Result};

pub use cluster::{cluster_datasets, kmeans, ClusterAssignment, KMeansRun};
pub use dimensionality::{dimensionality_metrics, pca_eigenvalues, Dimensionality};
pub use linearity::{linearity_metrics, train_linear_classifier, LinearModel, Linearity, SvmConfig};
pub use neighborhood::{
    hypersphere_count, lsc_measure, minimum_spanning_tree, n1_measure, n2_measure, n3_measure, neighborhood_metrics,
    Neighborhood, SpanningTree,
};
pub use overlap::{fisher_ratios, overlapping_metrics, Overlap};

/// Default row cutoff for the quadratic neighbourhood measures.
pub const NEIGHBORHOOD_CUTOFF: usize = 15_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Measure {
    T2,
    T3,
    T4,
    L1,
    L2,
    L3,
    F1,
    F1v,
    F2,
    F3,
    F4,
    N1,
    N2,
    N3,
    N4,
    T1,
    Lsc,
}

impl Measure {
    pub const ALL: [Measure; 17] = [
        Measure::T2,
        Measure::T3,
        Measure::T4,
        Measure::L1,
        Measure::L2,
        Measure::L3,
        Measure::F1,
        Measure::F1v,
        Measure::F2,
        Measure::F3,
        Measure::F4,
        Measure::N1,
        Measure::N2,
        Measure::N3,
        Measure::N4,
        Measure::T1,
        Measure::Lsc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Measure::T2 => "t2",
            Measure::T3 => "t3",
            Measure::T4 => "t4",
            Measure::L1 => "l1",
            Measure::L2 => "l2",
            Measure::L3 => "l3",
            Measure::F1 => "f1",
            Measure::F1v => "f1v",
            Measure::F2 => "f2",
            Measure::F3 => "f3",
            Measure::F4 => "f4",
            Measure::N1 => "n1",
            Measure::N2 => "n2",
            Measure::N3 => "n3",
            Measure::N4 => "n4",
            Measure::T1 => "t1",
            Measure::Lsc => "lsc",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown measure `{s}`")))
    }
}

/// Knobs for profile computation. The defaults reproduce the value tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityOptions {
    /// Eigendecompose the correlation instead of the covariance matrix.
    pub pca_standardize: bool,
    /// Report n/p, n/k95, p/k95 instead of p/n, k95/n, k95/p.
    pub inverted_dimensionality: bool,
    pub neighborhood_scaling: Scaling,
    /// Neighbourhood measures become NA above this many rows...
    pub size_cutoff: usize,
    /// ...unless a uniform subsample of `size_cutoff` rows is used instead.
    pub subsample_large: bool,
    pub svm: SvmConfig,
}

impl Default for ComplexityOptions {
    fn default() -> Self {
        Self {
            pca_standardize: false,
            inverted_dimensionality: false,
            neighborhood_scaling: Scaling::Standardized,
            size_cutoff: NEIGHBORHOOD_CUTOFF,
            subsample_large: false,
            svm: SvmConfig::default(),
        }
    }
}

/// All seventeen measures for one dataset; `None` marks NA.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ComplexityProfile {
    pub dataset_name: String,
    pub t2: Option<f64>,
    pub t3: Option<f64>,
    pub t4: Option<f64>,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub l3: Option<f64>,
    pub f1: Option<f64>,
    pub f1v: Option<f64>,
    pub f2: Option<f64>,
    pub f3: Option<f64>,
    pub f4: Option<f64>,
    pub n1: Option<f64>,
    pub n2: Option<f64>,
    pub n3: Option<f64>,
    pub n4: Option<f64>,
    pub t1: Option<f64>,
    pub lsc: Option<f64>,
    /// Why measures are NA, one entry per failing family.
    pub na_reasons: Vec<String>,
}

impl ComplexityProfile {
    pub fn get(&self, m: Measure) -> Option<f64> {
        match m {
            Measure::T2 => self.t2,
            Measure::T3 => self.t3,
            Measure::T4 => self.t4,
            Measure::L1 => self.l1,
            Measure::L2 => self.l2,
            Measure::L3 => self.l3,
            Measure::F1 => self.f1,
            Measure::F1v => self.f1v,
            Measure::F2 => self.f2,
            Measure::F3 => self.f3,
            Measure::F4 => self.f4,
            Measure::N1 => self.n1,
            Measure::N2 => self.n2,
            Measure::N3 => self.n3,
            Measure::N4 => self.n4,
            Measure::T1 => self.t1,
            Measure::Lsc => self.lsc,
        }
    }

    pub fn values(&self) -> Vec<Option<f64>> {
        Measure::ALL.iter().map(|&m| self.get(m)).collect()
    }
}

/// Compute every measure. A family that fails is NA-flagged with its reason;
/// only a single-class dataset is an error.
pub fn complexity_profile(ds: &Dataset, seed: u64, options: &ComplexityOptions) -> Result<ComplexityProfile> {
    let s = class_stats(ds);
    if s.n_minority == 0 || s.n_majority == 0 {
        return Err(Error::SingleClass);
    }
    let mut p = ComplexityProfile {
        dataset_name: ds.name.clone(),
        ..Default::default()
    };

    let d = dimensionality_metrics(ds, options);
    p.t2 = Some(d.t2);
    p.t3 = Some(d.t3);
    p.t4 = Some(d.t4);

    match linearity_metrics(ds, seed, &options.svm) {
        Ok(l) => {
            p.l1 = Some(l.l1);
            p.l2 = Some(l.l2);
            p.l3 = Some(l.l3);
        }
        Err(e) => p.na_reasons.push(format!("linearity: {e}")),
    }

    match overlapping_metrics(ds) {
        Ok(o) => {
            p.f1 = o.f1;
            p.f1v = o.f1v;
            p.f2 = Some(o.f2);
            p.f3 = Some(o.f3);
            p.f4 = Some(o.f4);
            if o.f1.is_none() {
                p.na_reasons.push("f1: every feature has zero within-class variance".into());
            }
            if o.f1v.is_none() {
                p.na_reasons.push("f1v: degenerate within-class scatter".into());
            }
        }
        Err(e) => p.na_reasons.push(format!("overlap: {e}")),
    }

    match neighborhood_metrics(ds, seed, options) {
        Ok(n) => {
            p.n1 = Some(n.n1);
            p.n2 = Some(n.n2);
            p.n3 = Some(n.n3);
            p.n4 = Some(n.n4);
            p.t1 = Some(n.t1);
            p.lsc = Some(n.lsc);
        }
        Err(e) => p.na_reasons.push(format!("neighborhood: {e}")),
    }
    Ok(p)
}

/// Write profiles as CSV with one row per dataset; NA cells are empty.
pub fn write_profiles_csv<W: std::io::Write>(profiles: &[ComplexityProfile], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Io { path: "<profiles>".into(), message: e.to_string() };
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["dataset".to_string()];
    header.extend(Measure::ALL.iter().map(|m| m.name().to_string()));
    w.write_record(&header).map_err(io)?;
    for p in profiles {
        let mut row = vec![p.dataset_name.clone()];
        row.extend(p.values().into_iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io { path: "<profiles>".into(), message: e.to_string() })?;
    Ok(())
}

/// Read profiles written by [`write_profiles_csv`].
pub fn read_profiles_csv<R: std::io::Read>(input: R) -> Result<Vec<ComplexityProfile>> {
    let io = |e: csv::Error| Error::Io { path: "<profiles>".into(), message: e.to_string() };
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers().map_err(io)?.iter().map(str::to_string).collect();
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(io)?;
        let mut p = ComplexityProfile::default();
        for (h, cell) in header.iter().zip(rec.iter()) {
            if h == "dataset" {
                p.dataset_name = cell.to_string();
                continue;
            }
            let v = if cell.is_empty() { None } else { cell.parse::<f64>().ok() };
            let m: Measure = h.parse()?;
            *field_mut(&mut p, m) = v;
        }
        out.push(p);
    }
    Ok(out)
}

fn field_mut(p: &mut ComplexityProfile, m: Measure) -> &mut Option<f64> {
    match m {
        Measure::T2 => &mut p.t2,
        Measure::T3 => &mut p.t3,
        Measure::T4 => &mut p.t4,
        Measure::L1 => &mut p.l1,
        Measure::L2 => &mut p.l2,
        Measure::L3 => &mut p.l3,
        Measure::F1 => &mut p.f1,
        Measure::F1v => &mut p.f1v,
        Measure::F2 => &mut p.f2,
        Measure::F3 => &mut p.f3,
        Measure::F4 => &mut p.f4,
        Measure::N1 => &mut p.n1,
        Measure::N2 => &mut p.n2,
        Measure::N3 => &mut p.n3,
        Measure::N4 => &mut p.n4,
        Measure::T1 => &mut p.t1,
        Measure::Lsc => &mut p.lsc,
    }
}
