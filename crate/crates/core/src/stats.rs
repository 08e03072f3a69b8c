//! Nonparametric tests for comparing experimental conditions.
//!
//! Kruskal-Wallis and Friedman use mid-ranks with the usual tie corrections.
//! Dunn's post-hoc z-tests are adjusted with Benjamini-Hochberg by default.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

/// Outcome of an omnibus test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test: String,
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
    pub n: usize,
}

/// One pairwise comparison from a post-hoc procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub group_a: usize,
    pub group_b: usize,
    pub z: f64,
    pub p_value: f64,
    pub p_adjusted: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PAdjust {
    #[default]
    BenjaminiHochberg,
    Bonferroni,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpearmanResult {
    pub rho: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Mid-ranks (1-based) and the sizes of tie groups larger than one.
pub fn mid_ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j + 1) as f64 / 2.0;
        for &o in &order[i..j] {
            ranks[o] = r;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

fn tie_sum(ties: &[usize]) -> f64 {
    ties.iter().map(|&t| (t * t * t - t) as f64).sum()
}

pub fn chi2_sf(x: f64, df: f64) -> f64 {
    ChiSquared::new(df).expect("df > 0").sf(x)
}

pub fn normal_two_sided(z: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * n.sf(z.abs())).min(1.0)
}

pub fn t_two_sided(t: f64, df: f64) -> f64 {
    let d = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    (2.0 * d.sf(t.abs())).min(1.0)
}

/// Benjamini-Hochberg step-up adjustment, returned in input order.
pub fn bh_adjust(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0_f64;
    for rank in (1..=m).rev() {
        let i = order[rank - 1];
        running = running.min(p[i] * (m as f64 / rank as f64));
        adjusted[i] = running;
    }
    adjusted
}

fn adjust(p: &[f64], method: PAdjust) -> Vec<f64> {
    match method {
        PAdjust::BenjaminiHochberg => bh_adjust(p),
        PAdjust::Bonferroni => p.iter().map(|v| (v * p.len() as f64).min(1.0)).collect(),
        PAdjust::None => p.to_vec(),
    }
}

fn check_groups(groups: &[Vec<f64>]) -> Result<()> {
    if groups.len() < 2 {
        return Err(Error::TooFewGroups { found: groups.len(), needed: 2 });
    }
    if let Some(i) = groups.iter().position(Vec::is_empty) {
        return Err(Error::EmptyGroup(i));
    }
    Ok(())
}

/// Kruskal-Wallis H test with tie correction; chi-square with groups-1 df.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<TestReport> {
    check_groups(groups)?;
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = pooled.len() as f64;
    let (ranks, ties) = mid_ranks(&pooled);
    let mut offset = 0;
    let mut sum = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        sum += r * r / g.len() as f64;
        offset += g.len();
    }
    let h = 12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0);
    let correction = 1.0 - tie_sum(&ties) / (n * n * n - n);
    let df = (groups.len() - 1) as f64;
    let (statistic, p_value) = if correction <= 0.0 {
        (0.0, 1.0)
    } else {
        let h = (h / correction).max(0.0);
        (h, chi2_sf(h, df))
    };
    Ok(TestReport {
        test: "kruskal_wallis".into(),
        statistic,
        df,
        p_value,
        n: pooled.len(),
    })
}

/// Friedman test. Each block holds one value per treatment.
pub fn friedman(blocks: &[Vec<f64>]) -> Result<TestReport> {
    if blocks.is_empty() {
        return Err(Error::TooFewGroups { found: 0, needed: 1 });
    }
    let t = blocks[0].len();
    if t < 2 {
        return Err(Error::TooFewGroups { found: t, needed: 2 });
    }
    if blocks.iter().any(|b| b.len() != t) {
        return Err(Error::UnbalancedBlocks);
    }
    let b = blocks.len() as f64;
    let tf = t as f64;
    let mut rank_sums = vec![0.0; t];
    let mut ties_total = 0.0;
    for block in blocks {
        let (r, ties) = mid_ranks(block);
        for (s, v) in rank_sums.iter_mut().zip(r) {
            *s += v;
        }
        ties_total += tie_sum(&ties);
    }
    let ss: f64 = rank_sums.iter().map(|r| r * r).sum();
    let chi = 12.0 / (b * tf * (tf + 1.0)) * ss - 3.0 * b * (tf + 1.0);
    let correction = 1.0 - ties_total / (b * (tf * tf * tf - tf));
    let df = tf - 1.0;
    let (statistic, p_value) = if correction <= 0.0 {
        (0.0, 1.0)
    } else {
        let c = (chi / correction).max(0.0);
        (c, chi2_sf(c, df))
    };
    Ok(TestReport {
        test: "friedman".into(),
        statistic,
        df,
        p_value,
        n: blocks.len(),
    })
}

/// Dunn's pairwise z-tests on pooled mid-ranks, for every pair a < b.
pub fn dunn_posthoc(groups: &[Vec<f64>], method: PAdjust) -> Result<Vec<PairwiseComparison>> {
    check_groups(groups)?;
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = pooled.len() as f64;
    let (ranks, ties) = mid_ranks(&pooled);
    let mut means = Vec::with_capacity(groups.len());
    let mut offset = 0;
    for g in groups {
        means.push(ranks[offset..offset + g.len()].iter().sum::<f64>() / g.len() as f64);
        offset += g.len();
    }
    let base = n * (n + 1.0) / 12.0 - tie_sum(&ties) / (12.0 * (n - 1.0));
    let mut out = Vec::new();
    for a in 0..groups.len() {
        for b in a + 1..groups.len() {
            let se = (base * (1.0 / groups[a].len() as f64 + 1.0 / groups[b].len() as f64)).sqrt();
            let diff = means[a] - means[b];
            let z = if se > 0.0 { diff / se } else { 0.0 };
            out.push(PairwiseComparison {
                group_a: a,
                group_b: b,
                z,
                p_value: normal_two_sided(z),
                p_adjusted: 0.0,
            });
        }
    }
    let raw: Vec<f64> = out.iter().map(|c| c.p_value).collect();
    for (c, p) in out.iter_mut().zip(adjust(&raw, method)) {
        c.p_adjusted = p;
    }
    Ok(out)
}

fn pearson_r(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with a t approximation on n-2 df.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<SpearmanResult> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {}", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::TooFewObservations(x.len()));
    }
    let (rx, tx) = mid_ranks(x);
    let (ry, ty) = mid_ranks(y);
    let n = x.len() as f64;
    let rho = if tx.is_empty() && ty.is_empty() {
        let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
        1.0 - 6.0 * d2 / (n * (n * n - 1.0))
    } else {
        pearson_r(&rx, &ry).ok_or(Error::ConstantInput)?
    };
    Ok(SpearmanResult {
        rho,
        p_value: correlation_p(rho, x.len()),
        n: x.len(),
    })
}

/// Largest n for which [`spearman_exact`] enumerates permutations.
pub const EXACT_SPEARMAN_LIMIT: usize = 9;

/// Spearman with a two-sided permutation p-value: the share of all n!
/// orderings of `y` whose |rho| reaches the observed |rho|.
pub fn spearman_exact(x: &[f64], y: &[f64]) -> Result<SpearmanResult> {
    let observed = spearman(x, y)?;
    let n = x.len();
    if n > EXACT_SPEARMAN_LIMIT {
        return Err(Error::InvalidParameter(format!(
            "exact Spearman is limited to n <= {EXACT_SPEARMAN_LIMIT}, got {n}"
        )));
    }
    let (rx, _) = mid_ranks(x);
    let (mut ry, _) = mid_ranks(y);
    let target = observed.rho.abs() - 1e-12;
    let (mut hits, mut total) = (0u64, 0u64);
    // Heap's algorithm over the y ranks
    let mut c = vec![0usize; n];
    let mut visit = |ry: &[f64]| {
        total += 1;
        if pearson_r(&rx, ry).map_or(0.0, f64::abs) >= target {
            hits += 1;
        }
    };
    visit(&ry);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                ry.swap(0, i);
            } else {
                ry.swap(c[i], i);
            }
            visit(&ry);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(SpearmanResult { p_value: hits as f64 / total as f64, ..observed })
}

/// Two-sided p-value of a correlation coefficient via t on n-2 df.
pub fn correlation_p(r: f64, n: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = n as f64 - 2.0;
    t_two_sided(r * (df / (1.0 - r * r)).sqrt(), df)
}
