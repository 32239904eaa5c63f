//! Benjamini–Hochberg step-up testing and FDR bounds under negative
//! dependence.
//!
//! BH at level α rejects the `k* = max{k : K p₍k₎ / k ≤ α}` smallest
//! p-values. Under independence or PRDS its FDR is at most `K₀α/K`; under
//! weak negative dependence of the nulls it is at most
//! `α · min(−ln α + 3.18, ℓ_K)`.

use serde::Serialize;

use crate::error::{check_alpha, Error, Result};
use crate::pmerge::{group_simes_values, MULTIPLIER_ALL_ALPHA};
use crate::types::{harmonic_ell, stable_order, GroupPartition, NullMask, PVector, RejectionSet};

/// Additive constant of the negative-dependence FDR bound as stated.
pub const SU_NEG_CONSTANT: f64 = 3.18;
/// The same constant at the precision the derivation actually yields.
pub const SU_NEG_CONSTANT_EXACT: f64 = 3.1792;

/// Step-up count `k*` for raw values; `values` need not be sorted.
/// The test is `K p₍k₎ ≤ k α`, which is exact when every `p ≤ α`.
fn step_up(values: &[f64], alpha: f64) -> (Vec<usize>, usize) {
    let order = stable_order(values);
    let k_total = values.len() as f64;
    let k_star = order
        .iter()
        .enumerate()
        .rev()
        .find(|(rank, &i)| k_total * values[i] <= (rank + 1) as f64 * alpha)
        .map_or(0, |(rank, _)| rank + 1);
    (order, k_star)
}

/// Rejection set of BH on an already-validated slice.
pub(crate) fn bh_slice(values: &[f64], alpha: f64) -> RejectionSet {
    let (order, k_star) = step_up(values, alpha);
    if k_star == 0 {
        return RejectionSet::empty();
    }
    RejectionSet::new(order[..k_star].to_vec())
}

/// Benjamini–Hochberg at level α. Ties are ordered by position.
pub fn bh(p: &PVector, alpha: f64) -> Result<RejectionSet> {
    check_alpha(alpha)?;
    Ok(bh_slice(p.values(), alpha))
}

/// Benjamini–Yekutieli: BH at level `α / ℓ_K`.
pub fn by(p: &PVector, alpha: f64) -> Result<RejectionSet> {
    check_alpha(alpha)?;
    bh(p, alpha / harmonic_ell(p.len())?)
}

/// False discovery proportion `F / max(R, 1)`; zero when nothing is rejected.
pub fn fdp(r: &RejectionSet, mask: &NullMask) -> Result<f64> {
    if let Some(&i) = r.rejected().iter().find(|&&i| i >= mask.len()) {
        return Err(Error::input(format!(
            "rejected index {} exceeds K={}",
            i + 1,
            mask.len()
        )));
    }
    Ok(fdp_unchecked(r, mask))
}

pub(crate) fn fdp_unchecked(r: &RejectionSet, mask: &NullMask) -> f64 {
    if r.is_empty() {
        return 0.0;
    }
    let false_discoveries = r.rejected().iter().filter(|&&i| mask.is_null(i)).count();
    false_discoveries as f64 / r.k_star() as f64
}

/// FDR bounds for BH under weakly negatively dependent nulls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdrBoundReport {
    pub alpha: f64,
    pub k: usize,
    /// `α(−ln α + 3.1792)` clamped to [0,1].
    pub su_neg_bound: f64,
    /// `α(−ln α + 3.18)` clamped to [0,1], the rounded headline form.
    pub su_neg_headline: f64,
    /// `ℓ_K α`, valid under arbitrary dependence.
    pub hommel_bound: f64,
    /// `min(su_neg_bound, hommel_bound, 1)`.
    pub combined: f64,
    /// `α · min(−ln α + 3.1792, ℓ_K K₀/K)` when the null count is known.
    pub k0_refined: Option<f64>,
}

pub fn bh_fdr_bound_negdep(alpha: f64, k: usize) -> Result<FdrBoundReport> {
    check_alpha(alpha)?;
    let ell = harmonic_ell(k)?;
    let su = (alpha * (-alpha.ln() + SU_NEG_CONSTANT_EXACT)).clamp(0.0, 1.0);
    let headline = (alpha * (-alpha.ln() + SU_NEG_CONSTANT)).clamp(0.0, 1.0);
    let hommel = ell * alpha;
    Ok(FdrBoundReport {
        alpha,
        k,
        su_neg_bound: su,
        su_neg_headline: headline,
        hommel_bound: hommel,
        combined: su.min(hommel).min(1.0),
        k0_refined: None,
    })
}

/// As [`bh_fdr_bound_negdep`], adding the bound that uses the true null count.
pub fn bh_fdr_bound_negdep_with_mask(alpha: f64, mask: &NullMask) -> Result<FdrBoundReport> {
    let k = mask.len();
    let mut report = bh_fdr_bound_negdep(alpha, k)?;
    let ell = harmonic_ell(k)?;
    let ratio = mask.k0() as f64 / k as f64;
    let refined = alpha * (-alpha.ln() + SU_NEG_CONSTANT_EXACT).min(ell * ratio);
    report.k0_refined = Some(refined.clamp(0.0, 1.0));
    Ok(report)
}

/// The two-hypothesis FDR expression `2α + α² − ln α`, reproduced as printed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct K2Bound {
    pub raw: f64,
    pub clamped: f64,
}

pub fn bh_fdr_bound_k2(alpha: f64) -> Result<K2Bound> {
    check_alpha(alpha)?;
    let raw = 2.0 * alpha + alpha * alpha - alpha.ln();
    Ok(K2Bound {
        raw,
        clamped: raw.min(1.0),
    })
}

/// Group-level BH on per-group Simes values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupBhResult {
    pub group_pvalues: Vec<f64>,
    /// Rejected groups (0-based group positions).
    pub rejection: RejectionSet,
    /// FDR guarantee under negative association, `3.4α(−ln(3.4α) + 3.18)` ∧ 1.
    pub na_bound: f64,
    /// Same guarantee with 3.4 replaced by `3.4 ∧ ℓ_K`.
    pub na_bound_tight: f64,
    /// FDR guarantee under PRDS.
    pub prds_bound: f64,
}

fn group_na_bound(alpha: f64, factor: f64) -> f64 {
    let a = factor * alpha;
    if a >= 1.0 {
        return 1.0;
    }
    (a * (-a.ln() + SU_NEG_CONSTANT)).clamp(0.0, 1.0)
}

/// BH at level α applied, without correction, to the Simes value of each group.
pub fn group_simes_bh(p: &PVector, groups: &GroupPartition, alpha: f64) -> Result<GroupBhResult> {
    check_alpha(alpha)?;
    let group_pvalues = group_simes_values(p, groups)?;
    let rejection = bh_slice(&group_pvalues, alpha);
    let factor = harmonic_ell(p.len())?.min(MULTIPLIER_ALL_ALPHA);
    Ok(GroupBhResult {
        group_pvalues,
        rejection,
        na_bound: group_na_bound(alpha, MULTIPLIER_ALL_ALPHA),
        na_bound_tight: group_na_bound(alpha, factor),
        prds_bound: alpha,
    })
}
