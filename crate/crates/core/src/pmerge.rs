//! Simes-type p-value merging and its type-1 error bounds under weak
//! negative dependence.
//!
//! For weakly negatively dependent uniform p-values the Simes test at level
//! α errs with probability at most
//!
//! ```text
//! α + Σ_{k=2}^K C(K,k) (αk/K)^k                      (additive, K-dependent)
//! α + 2α² + 9/2 α³ + (eα)⁴ / (√(8π) (1 − eα))        (succinct, α < 1/e)
//! α + 2α² + 6α³                                      (cubic, α ≤ 0.1)
//! ```
//!
//! and under any dependence at most `ℓ_K α`. The same bounds hold for the
//! weighted Simes function with weights on `Δ_K`.

use serde::Serialize;

use crate::error::{check_alpha, Error, Result};
use crate::types::{harmonic_ell, order_statistics, GroupPartition, PVector, WeightVector};

/// Multiplier making `c · S_K(P)` a p-value for every α ∈ (0,1).
pub const MULTIPLIER_ALL_ALPHA: f64 = 3.4;
/// Multiplier valid for α ∈ (0, 0.1].
pub const MULTIPLIER_SMALL_ALPHA: f64 = 1.26;
/// Two-level Simes-of-Simes multiplier, valid for α below [`SIMES_OF_SIMES_ALPHA_LIMIT`].
pub const SIMES_OF_SIMES_SMALL_MULTIPLIER: f64 = 1.52;
pub const SIMES_OF_SIMES_ALPHA_LIMIT: f64 = 0.083;
/// Largest α for which the cubic bound is proven.
pub const CUBIC_ALPHA_MAX: f64 = 0.1;

/// Minimum of `(K/k) · x₍k₎` over the sorted values `x`.
pub(crate) fn simes_of_sorted(sorted: &[f64]) -> f64 {
    let k_total = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| k_total * x / (i + 1) as f64)
        .fold(f64::INFINITY, f64::min)
}

/// The Simes function `S_K(p) = min_k (K/k) p₍k₎`.
pub fn simes(p: &PVector) -> f64 {
    simes_of_sorted(&order_statistics(p)).clamp(0.0, 1.0)
}

/// The Simes test: true iff `K p₍k₎ ≤ k α` for some k.
///
/// Agrees with `simes(p) ≤ α` except possibly at exact rounding boundaries,
/// and with "BH at level α rejects something" on every input.
pub fn simes_test(p: &PVector, alpha: f64) -> Result<bool> {
    check_alpha(alpha)?;
    Ok(simes_test_slice(p.values(), alpha))
}

pub(crate) fn simes_test_slice(values: &[f64], alpha: f64) -> bool {
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    simes_test_sorted(&sorted, alpha)
}

pub(crate) fn simes_test_sorted(sorted: &[f64], alpha: f64) -> bool {
    let k_total = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .any(|(i, &x)| k_total * x <= (i + 1) as f64 * alpha)
}

/// Weighted Simes function: Simes applied to `q_k = p_k / w_k`.
///
/// A zero weight makes `q_k = +∞` (the hypothesis cannot drive rejection)
/// unless `p_k = 0` too, in which case `q_k = 0`.
pub fn weighted_simes(p: &PVector, w: &WeightVector) -> Result<f64> {
    if p.len() != w.len() {
        return Err(Error::input(format!(
            "p has {} entries but weights have {}",
            p.len(),
            w.len()
        )));
    }
    let mut q: Vec<f64> = p
        .values()
        .iter()
        .zip(w.values())
        .map(|(&pk, &wk)| {
            if wk > 0.0 {
                pk / wk
            } else if pk > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .collect();
    q.sort_by(f64::total_cmp);
    Ok(simes_of_sorted(&q).clamp(0.0, 1.0))
}

/// `ln C(n, k)` via log-gamma; finite for n up to well beyond 10⁶.
fn ln_binomial(n: usize, k: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// Additive bound `α + Σ_{k=2}^K C(K,k)(αk/K)^k`, clamped to 1.
pub fn simes_bound_additive(alpha: f64, k: usize) -> Result<f64> {
    check_alpha(alpha)?;
    if k == 0 {
        return Err(Error::domain("K must be at least 1"));
    }
    let kf = k as f64;
    let mut total = alpha;
    for j in 2..=k {
        let jf = j as f64;
        let term = (ln_binomial(k, j) + jf * (alpha * jf / kf).ln()).exp();
        total += term;
        if total >= 1.0 {
            return Ok(1.0);
        }
    }
    Ok(total.min(1.0))
}

/// Succinct bound `α + 2α² + 9/2 α³ + (eα)⁴/(√(8π)(1−eα))`; `None` for α ≥ 1/e.
pub fn simes_bound_succinct(alpha: f64) -> Result<Option<f64>> {
    check_alpha(alpha)?;
    let ea = std::f64::consts::E * alpha;
    if ea >= 1.0 {
        return Ok(None);
    }
    let tail = ea.powi(4) / ((8.0 * std::f64::consts::PI).sqrt() * (1.0 - ea));
    Ok(Some(
        alpha + 2.0 * alpha * alpha + 4.5 * alpha.powi(3) + tail,
    ))
}

/// `s̃(α)`: the succinct bound clamped to 1, equal to 1 for α ≥ 1/e.
pub fn simes_bound_tilde(alpha: f64) -> Result<f64> {
    Ok(simes_bound_succinct(alpha)?.map_or(1.0, |s| s.min(1.0)))
}

/// Cubic bound `α + 2α² + 6α³`, proven for α ∈ (0, 0.1].
pub fn simes_bound_cubic(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if alpha > CUBIC_ALPHA_MAX {
        return Err(Error::domain(format!(
            "cubic bound holds only for alpha <= {CUBIC_ALPHA_MAX}, got {alpha}"
        )));
    }
    Ok(alpha + 2.0 * alpha * alpha + 6.0 * alpha.powi(3))
}

/// Hommel's bound `min(ℓ_K α, 1)`, valid under arbitrary dependence.
pub fn hommel_bound(alpha: f64, k: usize) -> Result<f64> {
    check_alpha(alpha)?;
    Ok((harmonic_ell(k)? * alpha).min(1.0))
}

/// The α whose `s̃(α)` equals `target`, found by bisection on (0, 1/e).
pub fn tilde_preimage(target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::domain(format!(
            "target must lie in (0,1), got {target}"
        )));
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0 / std::f64::consts::E);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if simes_bound_tilde(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `min(3.4, ℓ_K)`, the factor that turns a Simes value into a p-value.
pub fn correction_factor(k: usize) -> Result<f64> {
    Ok(harmonic_ell(k)?.min(MULTIPLIER_ALL_ALPHA))
}

/// `min(3.4, ℓ_K) · S_K(p)` clamped to 1: a p-value under weak negative
/// dependence.
pub fn simes_corrected_p(p: &PVector) -> f64 {
    let factor = correction_factor(p.len()).expect("PVector is nonempty");
    (factor * simes(p)).min(1.0)
}

/// Result of a two-level Simes combination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimesOfSimes {
    /// `S(S(P_{A₁}), …, S(P_{A_ℓ}))`.
    pub value: f64,
    /// `(3.4 ∧ ℓ_K)²` with `K` the total number of hypotheses.
    pub factor_total_k: f64,
    /// `(3.4 ∧ ℓ_ℓ)²` with `ℓ` the number of groups.
    pub factor_group_count: f64,
    /// Factor under positive regression dependence (no correction).
    pub factor_prd: f64,
    /// Multiplier valid for α below `small_alpha_limit`.
    pub small_alpha_multiplier: f64,
    pub small_alpha_limit: f64,
}

impl SimesOfSimes {
    /// `factor_total_k · value` clamped to 1.
    pub fn corrected(&self) -> f64 {
        (self.factor_total_k * self.value).min(1.0)
    }
}

/// Simes combination of per-group Simes values.
///
/// The caller picks which correction factor to apply; both readings of the
/// `ℓ_K` term are reported.
pub fn simes_of_simes(p: &PVector, groups: &GroupPartition) -> Result<SimesOfSimes> {
    let inner = group_simes_values(p, groups)?;
    let outer = simes(&PVector::new(inner)?);
    let f_total = correction_factor(p.len())?;
    let f_groups = correction_factor(groups.len())?;
    Ok(SimesOfSimes {
        value: outer,
        factor_total_k: f_total * f_total,
        factor_group_count: f_groups * f_groups,
        factor_prd: 1.0,
        small_alpha_multiplier: SIMES_OF_SIMES_SMALL_MULTIPLIER,
        small_alpha_limit: SIMES_OF_SIMES_ALPHA_LIMIT,
    })
}

/// Simes value of each group, in group order.
pub fn group_simes_values(p: &PVector, groups: &GroupPartition) -> Result<Vec<f64>> {
    if let Some(bad) = groups.groups().iter().flatten().find(|&&i| i >= p.len()) {
        return Err(Error::input(format!(
            "group index {} exceeds K={}",
            bad + 1,
            p.len()
        )));
    }
    groups
        .groups()
        .iter()
        .map(|g| Ok(simes(&p.select(g)?)))
        .collect()
}

/// Every Simes bound at one `(α, K)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimesBoundReport {
    pub alpha: f64,
    pub k: usize,
    pub additive_general: f64,
    /// Unclamped succinct bound; absent for α ≥ 1/e.
    pub succinct: Option<f64>,
    /// Present only for α ≤ 0.1.
    pub cubic: Option<f64>,
    pub tilde_s: f64,
    pub hommel: f64,
}

impl SimesBoundReport {
    /// `min(s̃(α), ℓ_K α)`.
    pub fn combined(&self) -> f64 {
        self.tilde_s.min(self.hommel)
    }

    pub fn tilde_ratio(&self) -> f64 {
        self.tilde_s / self.alpha
    }
}

pub fn bound_report(alpha: f64, k: usize) -> Result<SimesBoundReport> {
    Ok(SimesBoundReport {
        alpha,
        k,
        additive_general: simes_bound_additive(alpha, k)?,
        succinct: simes_bound_succinct(alpha)?,
        cubic: if alpha <= CUBIC_ALPHA_MAX {
            Some(simes_bound_cubic(alpha)?)
        } else {
            None
        },
        tilde_s: simes_bound_tilde(alpha)?,
        hommel: hommel_bound(alpha, k)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pv(v: &[f64]) -> PVector {
        PVector::new(v.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Exact `C(n,k)` by integer arithmetic; independent of the log-gamma path.
    fn binom_exact(n: u64, k: u64) -> f64 {
        let mut c: u128 = 1;
        for i in 0..k {
            c = c * (n - i) as u128 / (i + 1) as u128;
        }
        c as f64
    }

    fn additive_oracle(alpha: f64, k: u64) -> f64 {
        let kf = k as f64;
        let s: f64 = (2..=k)
            .map(|j| binom_exact(k, j) * (alpha * j as f64 / kf).powi(j as i32))
            .sum();
        (alpha + s).min(1.0)
    }

    #[test]
    fn simes_examples() {
        assert!(close(simes(&pv(&[0.02, 0.9])), 0.04, 1e-15));
        assert!(close(simes(&pv(&[0.01, 0.04, 0.5])), 0.03, 1e-15));
        for k in [1, 2, 7, 50] {
            assert!(close(simes(&pv(&vec![0.37; k])), 0.37, 1e-15));
        }
    }

    #[test]
    fn weighted_simes_examples() {
        let w = WeightVector::new(vec![2.0, 0.0]).unwrap();
        assert!(close(
            weighted_simes(&pv(&[0.1, 0.1]), &w).unwrap(),
            0.1,
            1e-15
        ));
        let w = WeightVector::new(vec![0.5, 1.5]).unwrap();
        assert!(close(
            weighted_simes(&pv(&[0.04, 0.5]), &w).unwrap(),
            0.16,
            1e-15
        ));
        let w = WeightVector::new(vec![2.0, 0.0]).unwrap();
        assert_eq!(weighted_simes(&pv(&[0.3, 0.0]), &w).unwrap(), 0.0);
        assert!(weighted_simes(&pv(&[0.1]), &w).is_err());
    }

    #[test]
    fn additive_examples() {
        assert!(close(simes_bound_additive(0.05, 2).unwrap(), 0.0525, 1e-15));
        assert_eq!(simes_bound_additive(0.3, 1).unwrap(), 0.3);
        let expect = 0.1 + 3.0 * (0.2f64 / 3.0).powi(2) + (0.3f64 / 3.0).powi(3);
        assert!(close(simes_bound_additive(0.1, 3).unwrap(), expect, 1e-14));
        assert!(close(expect, 0.114_333_333_333, 1e-12));
        assert!(simes_bound_additive(0.0, 3).is_err());
        assert!(simes_bound_additive(1.0, 3).is_err());
    }

    #[test]
    fn additive_matches_exact_binomials() {
        for k in [2u64, 3, 5, 10, 30, 60] {
            for alpha in [0.001, 0.01, 0.05, 0.1, 0.2, 0.3] {
                let got = simes_bound_additive(alpha, k as usize).unwrap();
                let want = additive_oracle(alpha, k);
                assert!(
                    close(got, want, 1e-12 * want),
                    "K={k} α={alpha}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn additive_stays_finite_for_huge_k() {
        let b = simes_bound_additive(0.05, 1_000_000).unwrap();
        assert!(b.is_finite() && b > 0.05 && b <= simes_bound_tilde(0.05).unwrap());
    }

    #[test]
    fn additive_monotone_in_k_and_below_tilde() {
        for alpha in [0.005, 0.01, 0.05, 0.1, 0.2, 0.3] {
            let tilde = simes_bound_tilde(alpha).unwrap();
            let mut prev = 0.0;
            for k in 1..=400 {
                let b = simes_bound_additive(alpha, k).unwrap();
                assert!(b >= prev - 1e-15, "α={alpha} K={k}");
                if k >= 4 {
                    assert!(b <= tilde + 1e-12, "α={alpha} K={k}: {b} > {tilde}");
                }
                prev = b;
            }
        }
    }

    #[test]
    fn tilde_examples() {
        assert!(close(simes_bound_tilde(0.05).unwrap(), 0.0556, 5e-5));
        assert!(close(simes_bound_tilde(0.01).unwrap(), 0.0102, 5e-5));
        assert!(close(simes_bound_tilde(0.1).unwrap(), 0.1260, 5e-5));
        assert_eq!(simes_bound_tilde(0.5).unwrap(), 1.0);
        assert_eq!(simes_bound_tilde(1.0 / std::f64::consts::E).unwrap(), 1.0);
        assert!(simes_bound_succinct(0.4).unwrap().is_none());
    }

    #[test]
    fn cubic_examples() {
        assert!(close(simes_bound_cubic(0.05).unwrap(), 0.0558, 5e-5));
        assert!(close(simes_bound_cubic(0.0454).unwrap(), 0.0501, 5e-5));
        assert!(close(simes_bound_cubic(0.1).unwrap(), 0.1260, 5e-5));
        assert!(simes_bound_cubic(0.11).unwrap_err().is_domain());
    }

    #[test]
    fn tilde_ratio_limits() {
        for i in 1..=9999 {
            let alpha = i as f64 / 10_000.0;
            let r = simes_bound_tilde(alpha).unwrap() / alpha;
            assert!(r <= 3.4, "α={alpha} ratio {r}");
            if alpha <= 0.1 {
                assert!(r <= 1.26 + 1e-12, "α={alpha} ratio {r}");
                assert!(simes_bound_tilde(alpha).unwrap() <= simes_bound_cubic(alpha).unwrap());
            }
        }
    }

    #[test]
    fn preimages_round_to_table_alphas() {
        // α values whose s̃ equals 0.01, 0.05 and 0.1.
        let a1 = tilde_preimage(0.01).unwrap();
        let a5 = tilde_preimage(0.05).unwrap();
        let a10 = tilde_preimage(0.1).unwrap();
        assert!(close(a1, 0.0098, 5e-5), "{a1}");
        assert!(close(a5, 0.0454, 5e-5), "{a5}");
        assert!(close(a10, 0.0830, 5e-5), "{a10}");
        assert!(close(simes_bound_tilde(a10).unwrap(), 0.1, 1e-12));
    }

    #[test]
    fn corrected_p_examples() {
        // K=2: factor ℓ₂ = 1.5
        assert!(close(simes_corrected_p(&pv(&[0.02, 0.9])), 0.06, 1e-15));
        let mut v = vec![0.9; 100];
        v[0] = 0.0001; // simes = 100 · 0.0001 = 0.01
        assert!(close(simes(&pv(&v)), 0.01, 1e-15));
        assert!(close(simes_corrected_p(&pv(&v)), 0.034, 1e-15));
        assert_eq!(simes_corrected_p(&pv(&vec![0.5; 100])), 1.0);
    }

    #[test]
    fn simes_of_simes_examples() {
        let p = pv(&[0.02, 0.9, 0.3]);
        let whole = GroupPartition::new(vec![vec![0, 1, 2]], 3).unwrap();
        let r = simes_of_simes(&p, &whole).unwrap();
        assert_eq!(r.value, simes(&p));
        let f = harmonic_ell(3).unwrap();
        assert!(close(r.factor_total_k, f * f, 1e-15));
        assert_eq!(r.factor_group_count, 1.0);

        let single = simes_of_simes(&p, &GroupPartition::singletons(3)).unwrap();
        assert_eq!(single.value, simes(&p));

        let p = pv(&[0.02, 0.9, 0.02, 0.9]);
        let g = GroupPartition::new(vec![vec![0, 1], vec![2, 3]], 4).unwrap();
        assert!(close(simes_of_simes(&p, &g).unwrap().value, 0.04, 1e-15));
        assert!(GroupPartition::new(vec![vec![0, 1], vec![1, 2]], 4).is_err());
    }

    #[test]
    fn bound_report_examples() {
        let r = bound_report(0.05, 1000).unwrap();
        assert!(close(r.tilde_s, 0.0556, 5e-5));
        assert!(close(r.tilde_ratio(), 1.112, 1e-3));
        assert!(r.cubic.is_some());
        assert_eq!(r.combined(), r.tilde_s);
        assert!(close(bound_report(0.0098, 10).unwrap().tilde_s, 0.01, 5e-5));
        assert!(close(bound_report(0.083, 10).unwrap().tilde_s, 0.1, 5e-5));
        assert!(bound_report(0.2, 10).unwrap().cubic.is_none());
        let small = bound_report(0.05, 2).unwrap();
        assert!(close(small.hommel, 0.075, 1e-15));
        assert!(small.additive_general <= small.tilde_s);
    }

    fn pvec_strategy() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.0f64..=1.0, 1..30)
    }

    proptest! {
        #[test]
        fn simes_between_min_and_k_min(v in pvec_strategy()) {
            let s = simes(&pv(&v));
            let m = v.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert!(s >= m);
            prop_assert!(s <= (v.len() as f64 * m).min(1.0) + 1e-15);
        }

        #[test]
        fn simes_permutation_invariant(v in pvec_strategy(), rot in 0usize..30) {
            let mut w = v.clone();
            let r = rot % w.len();
            w.rotate_left(r);
            w.reverse();
            prop_assert_eq!(simes(&pv(&v)), simes(&pv(&w)));
        }

        #[test]
        fn simes_monotone(v in pvec_strategy(), bumps in proptest::collection::vec(0.0f64..0.5, 30)) {
            let q: Vec<f64> = v.iter().zip(&bumps).map(|(a, b)| (a + b).min(1.0)).collect();
            prop_assert!(simes(&pv(&v)) <= simes(&pv(&q)));
            let w = WeightVector::uniform(v.len()).unwrap();
            prop_assert!(weighted_simes(&pv(&v), &w).unwrap() <= weighted_simes(&pv(&q), &w).unwrap());
        }

        #[test]
        fn unit_weights_reduce_to_simes(v in pvec_strategy()) {
            let w = WeightVector::uniform(v.len()).unwrap();
            prop_assert_eq!(weighted_simes(&pv(&v), &w).unwrap(), simes(&pv(&v)));
        }
    }
}
