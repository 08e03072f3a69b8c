use rand::seq::SliceRandom;
use rand::Rng as _;

use super::smote::MinorityContext;
use super::{oversample_count, unchanged, validate, BalanceSpec, OutcomeBuilder, ResampleOutcome};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::seeded_rng;

/// Anchors with a safe level above this value are interpolated directly.
pub const SAFE_THRESHOLD: f64 = 0.5;

/// Fraction of same-class rows among each minority row's k nearest neighbours.
pub fn safe_levels(data: &Dataset, ctx: &MinorityContext, k: usize) -> Result<Vec<f64>> {
    let majority = ctx.majority_counts(data, k)?;
    Ok(majority.iter().map(|&m| (k - m) as f64 / k as f64).collect())
}

/// Interpolation weight scaled toward the safer endpoint.
pub fn biased_lambda(u: f64, s_anchor: f64, s_partner: f64) -> f64 {
    let total = s_anchor + s_partner;
    if total > 0.0 {
        u * s_partner / total
    } else {
        0.0
    }
}

fn generate(data: &Dataset, spec: &BalanceSpec, relocate: bool) -> Result<ResampleOutcome> {
    validate(data, spec)?;
    let g = oversample_count(data, spec.target_ratio);
    if g == 0 {
        return Ok(unchanged(data));
    }
    let ctx = MinorityContext::new(data, spec)?;
    let s = safe_levels(data, &ctx, spec.k)?;
    // minority position of each row index, for looking up partner safe levels
    let mut pos = vec![usize::MAX; data.n_rows()];
    for (a, &i) in ctx.minority.iter().enumerate() {
        pos[i] = a;
    }
    let safe: Vec<usize> = (0..s.len()).filter(|&a| s[a] > SAFE_THRESHOLD).collect();
    let mut anchors = if relocate { (0..s.len()).collect() } else { safe };
    if anchors.is_empty() {
        return Err(Error::NoSafeAnchors);
    }
    let mut rng = seeded_rng(spec.seed);
    let mut out = OutcomeBuilder::new(data);
    anchors.shuffle(&mut rng);
    let mut relocated = vec![false; s.len()];
    for t in 0..g {
        let a = anchors[t % anchors.len()];
        let anchor = ctx.minority[a];
        let nb = &ctx.graph.indices[a];
        if s[a] > SAFE_THRESHOLD {
            let partner = nb[rng.gen_range(0..nb.len())];
            let u: f64 = rng.gen();
            let lambda = biased_lambda(u, s[a], s[pos[partner]]);
            out.interpolate(data.row(anchor), data.row(partner), lambda, anchor, partner);
        } else {
            // move the anchor halfway toward its safest minority neighbour and
            // interpolate on the remaining half-segment
            let safest = nb
                .iter()
                .copied()
                .max_by(|&x, &y| s[pos[x]].total_cmp(&s[pos[y]]).then(y.cmp(&x)))
                .expect("k >= 1");
            let mid = relocated_anchor(data.row(anchor), data.row(safest));
            let lambda: f64 = rng.gen();
            out.interpolate(&mid, data.row(safest), lambda, anchor, safest);
            relocated[a] = true;
        }
    }
    out.trace_mut().relocated = relocated.iter().filter(|&&r| r).count();
    Ok(out.finish())
}

/// Midpoint between an unsafe anchor and its safest neighbour.
pub fn relocated_anchor(anchor: &[f64], safest: &[f64]) -> Vec<f64> {
    anchor.iter().zip(safest).map(|(a, b)| a + 0.5 * (b - a)).collect()
}

pub fn safe_level_smote(data: &Dataset, spec: &BalanceSpec) -> Result<ResampleOutcome> {
    generate(data, spec, false)
}

pub fn relocating_safe_level_smote(data: &Dataset, spec: &BalanceSpec) -> Result<ResampleOutcome> {
    generate(data, spec, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resampling::Method;
    use crate::Scaling;
    use ndarray::array;

    #[test]
    fn midpoint_relocation() {
        assert_eq!(relocated_anchor(&[0.0], &[2.0]), vec![1.0]);
    }

    #[test]
    fn lambda_bias() {
        assert_eq!(biased_lambda(1.0, 1.0, 1.0), 0.5);
        assert_eq!(biased_lambda(0.8, 0.0, 1.0), 0.8);
        assert_eq!(biased_lambda(0.8, 0.0, 0.0), 0.0);
    }

    #[test]
    fn safe_levels_on_six_points() {
        // minority 0, 1, 2 at 0.0, 0.1, 1.0; majority at 1.1, 1.2, 5.0
        let d = Dataset::from_parts(
            "t",
            array![[0.0], [0.1], [1.0], [1.1], [1.2], [5.0]],
            vec![1, 1, 1, 0, 0, 0],
        )
        .unwrap();
        let mut spec = BalanceSpec::new(Method::SafeLevel, 0);
        spec.k = 2;
        spec.scaling = Scaling::Raw;
        let ctx = MinorityContext::new(&d, &spec).unwrap();
        // row 0 -> {1, 2}: 2/2; row 1 -> {0, 2}: 2/2; row 2 -> {3, 4}: 0/2
        assert_eq!(safe_levels(&d, &ctx, 2).unwrap(), vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn no_safe_anchor_is_an_error() {
        let d = Dataset::from_parts(
            "t",
            array![[0.0], [10.0], [20.0], [0.1], [0.2], [10.1], [10.2], [20.1], [20.2]],
            vec![1, 1, 1, 0, 0, 0, 0, 0, 0],
        )
        .unwrap();
        let mut spec = BalanceSpec::new(Method::SafeLevel, 0);
        spec.k = 2;
        assert!(matches!(safe_level_smote(&d, &spec), Err(Error::NoSafeAnchors)));
        let out = relocating_safe_level_smote(&d, &spec).unwrap();
        assert_eq!(out.trace.synthetic, 3);
        assert_eq!(out.trace.relocated, 3);
    }

    #[test]
    fn all_safe_matches_safe_level() {
        let d = Dataset::from_parts(
            "t",
            array![[0.0], [0.1], [0.2], [0.3], [9.0], [9.1], [9.2], [9.3], [9.4], [9.5]],
            vec![1, 1, 1, 1, 0, 0, 0, 0, 0, 0],
        )
        .unwrap();
        let mut spec = BalanceSpec::new(Method::SafeLevel, 4);
        spec.k = 2;
        let a = safe_level_smote(&d, &spec).unwrap();
        let b = relocating_safe_level_smote(&d, &spec).unwrap();
        assert_eq!(a.data.features, b.data.features);
        assert_eq!(b.trace.relocated, 0);
    }
}
