//! Univariate feature filtering against the binary label.
//!
//! Each feature gets a point-biserial correlation test and a Wilcoxon rank-sum
//! test; p-values are Benjamini-Hochberg adjusted within each family.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::stats::{correlation_p, mid_ranks, normal_two_sided};

pub use crate::stats::bh_adjust;

/// Largest pooled size for which the exact rank-sum distribution is used.
pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub enum FilterMode {
    #[default]
    None,
    CorrelationOnly,
    SignificanceOnly,
    Intersection,
}

impl FilterMode {
    pub const ALL: [FilterMode; 4] = [
        FilterMode::None,
        FilterMode::CorrelationOnly,
        FilterMode::SignificanceOnly,
        FilterMode::Intersection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FilterMode::None => "none",
            FilterMode::CorrelationOnly => "cor",
            FilterMode::SignificanceOnly => "sig",
            FilterMode::Intersection => "intersect",
        }
    }
}

impl fmt::Display for FilterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FilterMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown filter mode `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub mode: FilterMode,
    pub alpha: f64,
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self { mode: FilterMode::None, alpha: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTest {
    pub r: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankSumTest {
    /// Mann-Whitney U of the first sample.
    pub w_stat: f64,
    pub p_value: f64,
    pub exact: bool,
}

/// Per-feature filtering record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub feature: usize,
    pub name: String,
    pub r: f64,
    pub p_r: f64,
    pub p_r_adj: f64,
    pub w_stat: f64,
    pub p_sig: f64,
    pub p_sig_adj: f64,
    pub in_correlated: bool,
    pub in_significant: bool,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedFeatureSet {
    pub mode: FilterMode,
    /// Selected column indices in ascending order.
    pub indices: Vec<usize>,
    pub records: Vec<FeatureRecord>,
}

/// Pearson correlation of a feature with 0/1 labels and its t-test p-value.
/// A constant input gives r = 0 and p = 1.
pub fn pearson_test(x: &[f64], y: &[f64]) -> Result<CorrelationTest> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", x.len(), y.len())));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::TooFewObservations(n));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(CorrelationTest { r: 0.0, p_value: 1.0 });
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    Ok(CorrelationTest { r, p_value: correlation_p(r, n) })
}

/// Number of subsets of size `m` from ranks 1..=n with each achievable rank
/// sum, indexed by sum.
fn rank_sum_counts(n: usize, m: usize) -> Vec<f64> {
    let max_sum = n * (n + 1) / 2;
    // counts[j][s]: subsets of size j with sum s
    let mut counts = vec![vec![0.0_f64; max_sum + 1]; m + 1];
    counts[0][0] = 1.0;
    for r in 1..=n {
        for j in (1..=m.min(r)).rev() {
            for s in (r..=max_sum).rev() {
                counts[j][s] += counts[j - 1][s - r];
            }
        }
    }
    counts.swap_remove(m)
}

/// Two-sided Wilcoxon rank-sum (Mann-Whitney) test.
///
/// Exact when the pooled size is at most [`EXACT_LIMIT`] and there are no ties;
/// otherwise a normal approximation with tie and continuity correction.
pub fn wilcoxon_rank_sum(x0: &[f64], x1: &[f64]) -> Result<RankSumTest> {
    if x0.is_empty() || x1.is_empty() {
        return Err(Error::TooFewObservations(x0.len() + x1.len()));
    }
    let n0 = x0.len();
    let n1 = x1.len();
    let pooled: Vec<f64> = x0.iter().chain(x1).copied().collect();
    let (ranks, ties) = mid_ranks(&pooled);
    let r0: f64 = ranks[..n0].iter().sum();
    let u = r0 - (n0 * (n0 + 1)) as f64 / 2.0;
    let mean = (n0 * n1) as f64 / 2.0;
    let n = (n0 + n1) as f64;

    if n0 + n1 <= EXACT_LIMIT && ties.is_empty() {
        let counts = rank_sum_counts(n0 + n1, n0);
        let total: f64 = counts.iter().sum();
        let offset = n0 * (n0 + 1) / 2;
        let u_idx = u.round() as usize;
        let lower: f64 = counts[offset..=offset + u_idx].iter().sum();
        let upper: f64 = counts[offset + u_idx..].iter().sum();
        let p = (2.0 * lower.min(upper) / total).min(1.0);
        return Ok(RankSumTest { w_stat: u, p_value: p, exact: true });
    }

    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0));
    let var = (n0 * n1) as f64 / 12.0 * ((n + 1.0) - tie_term);
    let p = if var <= 0.0 {
        1.0
    } else {
        let d = ((u - mean).abs() - 0.5).max(0.0);
        normal_two_sided(d / var.sqrt())
    };
    Ok(RankSumTest { w_stat: u, p_value: p, exact: false })
}

/// Test every feature and select according to the mode.
///
/// Fails with [`Error::NoFeaturesSelected`] when the selection is empty.
pub fn select_features(data: &Dataset, spec: FilterSpec) -> Result<SelectedFeatureSet> {
    let p = data.n_features();
    let y: Vec<f64> = data.labels.iter().map(|&l| f64::from(l)).collect();
    let mut records = Vec::with_capacity(p);
    for j in 0..p {
        let col: Vec<f64> = data.features.column(j).to_vec();
        let constant = col.iter().all(|&v| v == col[0]);
        let (cor, rs) = if constant {
            (
                CorrelationTest { r: 0.0, p_value: 1.0 },
                RankSumTest { w_stat: f64::NAN, p_value: 1.0, exact: false },
            )
        } else {
            let x0: Vec<f64> = (0..col.len()).filter(|&i| data.labels[i] == 0).map(|i| col[i]).collect();
            let x1: Vec<f64> = (0..col.len()).filter(|&i| data.labels[i] == 1).map(|i| col[i]).collect();
            (pearson_test(&col, &y)?, wilcoxon_rank_sum(&x0, &x1)?)
        };
        records.push(FeatureRecord {
            feature: j,
            name: data.feature_names[j].clone(),
            r: cor.r,
            p_r: cor.p_value,
            p_r_adj: 1.0,
            w_stat: rs.w_stat,
            p_sig: rs.p_value,
            p_sig_adj: 1.0,
            in_correlated: false,
            in_significant: false,
            selected: false,
        });
    }
    let p_r: Vec<f64> = records.iter().map(|r| r.p_r).collect();
    let p_sig: Vec<f64> = records.iter().map(|r| r.p_sig).collect();
    let constant: Vec<bool> = (0..p)
        .map(|j| {
            let c = data.features.column(j);
            c.iter().all(|&v| v == c[0])
        })
        .collect();
    for ((rec, a), b) in records.iter_mut().zip(bh_adjust(&p_r)).zip(bh_adjust(&p_sig)) {
        rec.p_r_adj = a;
        rec.p_sig_adj = b;
        let usable = !constant[rec.feature];
        rec.in_correlated = usable && a < spec.alpha;
        rec.in_significant = usable && b < spec.alpha;
        rec.selected = match spec.mode {
            FilterMode::None => true,
            FilterMode::CorrelationOnly => rec.in_correlated,
            FilterMode::SignificanceOnly => rec.in_significant,
            FilterMode::Intersection => rec.in_correlated && rec.in_significant,
        };
    }
    let indices: Vec<usize> = records.iter().filter(|r| r.selected).map(|r| r.feature).collect();
    if indices.is_empty() {
        return Err(Error::NoFeaturesSelected);
    }
    Ok(SelectedFeatureSet { mode: spec.mode, indices, records })
}

/// Write filtering records as CSV.
pub fn write_records<W: std::io::Write>(records: &[FeatureRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(|e| Error::Io { path: "<filter report>".into(), message: e.to_string() })?;
    }
    w.flush().map_err(|e| Error::Io { path: "<filter report>".into(), message: e.to_string() })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::Array2;

    #[test]
    fn pearson_small_instance() {
        let t = pearson_test(&[1.0, 2.0, 3.0, 4.0], &[0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(t.r, 0.894427190999916, epsilon = 1e-12);
        let t = pearson_test(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_abs_diff_eq!(t.r, 0.8, epsilon = 1e-12);
        assert!(matches!(pearson_test(&[1.0, 2.0], &[0.0, 1.0]), Err(Error::TooFewObservations(2))));
        assert_eq!(pearson_test(&[1.0, 1.0, 1.0], &[0.0, 1.0, 1.0]).unwrap().p_value, 1.0);
    }

    #[test]
    fn wilcoxon_exact_smallest_case() {
        let t = wilcoxon_rank_sum(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert!(t.exact);
        assert_eq!(t.w_stat, 0.0);
        assert_eq!(t.p_value, 1.0 / 3.0);
    }

    #[test]
    fn wilcoxon_identical_samples() {
        let t = wilcoxon_rank_sum(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(t.p_value, 1.0);
    }

    #[test]
    fn wilcoxon_normal_matches_reference() {
        // scipy.stats.mannwhitneyu(method="asymptotic", use_continuity=True)
        let x0: Vec<f64> = (0..15).map(|i| f64::from(i) * 0.7).collect();
        let x1: Vec<f64> = (0..12).map(|i| f64::from(i) * 0.9 + 3.0).collect();
        let t = wilcoxon_rank_sum(&x0, &x1).unwrap();
        assert!(!t.exact);
        assert_abs_diff_eq!(t.w_stat, 45.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.p_value, 0.02990263602980263, epsilon = 1e-9);
    }

    #[test]
    fn constant_features_are_never_selected() {
        let x = Array2::from_shape_fn((40, 2), |(i, j)| if j == 0 { 1.0 } else { (i % 20) as f64 });
        let y = (0..40).map(|i| u8::from(i % 20 >= 10)).collect();
        let d = Dataset::from_parts("t", x, y).unwrap();
        let s = select_features(&d, FilterSpec { mode: FilterMode::Intersection, alpha: 0.05 }).unwrap();
        assert_eq!(s.indices, vec![1]);
        assert_eq!(s.records[0].p_r, 1.0);
        assert_eq!(s.records[0].p_sig, 1.0);
        let all = select_features(&d, FilterSpec::default()).unwrap();
        assert_eq!(all.indices, vec![0, 1]);
    }

    #[test]
    fn empty_selection_is_an_error() {
        let x = Array2::from_shape_fn((20, 1), |(i, _)| ((i * 7) % 5) as f64);
        let y = (0..20).map(|i| u8::from(i % 2 == 0)).collect();
        let d = Dataset::from_parts("t", x, y).unwrap();
        let r = select_features(&d, FilterSpec { mode: FilterMode::CorrelationOnly, alpha: 0.05 });
        assert!(matches!(r, Err(Error::NoFeaturesSelected)));
    }
}
