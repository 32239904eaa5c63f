//! Merging e-values.
//!
//! If `E₁,…,E_K` are negatively upper orthant dependent e-values then every
//! product `∏_{i∈A} E_i`, every λ-product `∏(1 − λ_i + λ_i E_i)` with
//! `λ ∈ [0,1]^K`, and every convex combination of subset products (so every
//! U-statistic) is again an e-value. Averages are e-values under any
//! dependence.
//!
//! Infinite e-values are legal. In products `0 · ∞` is taken as `∞`: an
//! infinite e-value certifies rejection and is not cancelled by a zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{EVector, PVector, CONVEX_SUM_TOL};

/// Product of two e-values with the `0 · ∞ = ∞` convention.
#[inline]
fn e_mul(a: f64, b: f64) -> f64 {
    if a.is_infinite() || b.is_infinite() {
        f64::INFINITY
    } else {
        a * b
    }
}

fn check_index(i: usize, k: usize) -> Result<()> {
    if i < k {
        Ok(())
    } else {
        Err(Error::input(format!(
            "index {} out of range for K={k}",
            i + 1
        )))
    }
}

/// `∏_{i∈subset} e_i`; the empty product is 1.
pub fn product_e(e: &EVector, subset: &[usize]) -> Result<f64> {
    let v = e.values();
    subset.iter().try_fold(1.0, |acc, &i| {
        check_index(i, v.len())?;
        Ok(e_mul(acc, v[i]))
    })
}

/// Product over every coordinate.
pub fn product_all(e: &EVector) -> f64 {
    product_slice(e.values())
}

pub(crate) fn product_slice(e: &[f64]) -> f64 {
    e.iter().fold(1.0, |acc, &x| e_mul(acc, x))
}

/// `∏ (1 − λ_i + λ_i e_i)` for λ ∈ [0,1]^K.
pub fn lambda_product(e: &EVector, lambda: &[f64]) -> Result<f64> {
    if lambda.len() != e.len() {
        return Err(Error::input(format!(
            "lambda has {} entries but K={}",
            lambda.len(),
            e.len()
        )));
    }
    if let Some(l) = lambda.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::domain(format!("lambda must lie in [0,1], got {l}")));
    }
    Ok(lambda_product_unchecked(e.values(), lambda))
}

pub(crate) fn lambda_product_unchecked(e: &[f64], lambda: &[f64]) -> f64 {
    e.iter().zip(lambda).fold(1.0, |acc, (&x, &l)| {
        let factor = if l == 0.0 { 1.0 } else { 1.0 - l + l * x };
        e_mul(acc, factor)
    })
}

/// Order-`k` U-statistic: the mean of `∏_{i∈A} e_i` over all `|A| = k`.
///
/// Runs the elementary-symmetric-polynomial recurrence on running means,
/// `m_j(n) = (1 − j/n) m_j(n−1) + (j/n) e_n m_{j−1}(n−1)`, which costs
/// `O(K·k)` and never forms the (possibly huge) raw polynomial.
pub fn u_statistic(e: &EVector, k: usize) -> Result<f64> {
    if k == 0 || k > e.len() {
        return Err(Error::domain(format!(
            "U-statistic order must lie in 1..={}, got {k}",
            e.len()
        )));
    }
    Ok(u_statistic_unchecked(e.values(), k))
}

pub(crate) fn u_statistic_unchecked(e: &[f64], k: usize) -> f64 {
    let mut m = vec![0.0; k + 1];
    m[0] = 1.0;
    for (idx, &x) in e.iter().enumerate() {
        let n = (idx + 1) as f64;
        for j in (1..=k.min(idx + 1)).rev() {
            let jf = j as f64;
            let keep = if j == idx + 1 {
                0.0
            } else {
                (1.0 - jf / n) * m[j]
            };
            m[j] = keep + (jf / n) * e_mul(x, m[j - 1]);
        }
    }
    m[k]
}

/// Arithmetic mean; an e-value under arbitrary dependence.
pub fn average_e(e: &EVector) -> f64 {
    if e.is_empty() {
        return 1.0;
    }
    e.values().iter().sum::<f64>() / e.len() as f64
}

/// `Σ_A w_A ∏_{i∈A} e_i` for convex weights `w_A`.
pub fn convex_combo(e: &EVector, terms: &[(Vec<usize>, f64)]) -> Result<f64> {
    check_convex_weights(terms.iter().map(|(_, w)| *w))?;
    for (set, _) in terms {
        for &i in set {
            check_index(i, e.len())?;
        }
    }
    Ok(convex_unchecked(e.values(), terms))
}

pub(crate) fn convex_unchecked(e: &[f64], terms: &[(Vec<usize>, f64)]) -> f64 {
    terms.iter().fold(0.0, |acc, (set, w)| {
        if *w == 0.0 {
            return acc;
        }
        let prod = set.iter().fold(1.0, |p, &i| e_mul(p, e[i]));
        acc + w * prod
    })
}

pub(crate) fn check_convex_weights(weights: impl Iterator<Item = f64>) -> Result<()> {
    let mut sum = 0.0;
    for w in weights {
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::domain(format!(
                "convex weights must be nonnegative, got {w}"
            )));
        }
        sum += w;
    }
    if (sum - 1.0).abs() > CONVEX_SUM_TOL {
        return Err(Error::domain(format!(
            "convex weights must sum to 1, got {sum}"
        )));
    }
    Ok(())
}

/// A p-to-e calibrator: nonnegative, decreasing, `∫₀¹ φ ≤ 1`.
pub trait Calibrator {
    fn calibrate_one(&self, p: f64) -> f64;
}

/// The power calibrator `φ_κ(p) = κ p^(κ−1)`, κ ∈ (0,1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibratorSpec {
    kappa: f64,
}

impl CalibratorSpec {
    pub fn new(kappa: f64) -> Result<Self> {
        if kappa > 0.0 && kappa < 1.0 {
            Ok(CalibratorSpec { kappa })
        } else {
            Err(Error::domain(format!(
                "kappa must lie in (0,1), got {kappa}"
            )))
        }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

impl Calibrator for CalibratorSpec {
    #[inline]
    fn calibrate_one(&self, p: f64) -> f64 {
        // p = 0 gives +∞
        self.kappa * p.powf(self.kappa - 1.0)
    }
}

/// A user-supplied calibrator whose contract was checked numerically.
pub struct CheckedCalibrator<F> {
    f: F,
}

/// Grid used to check monotonicity of user calibrators.
const CALIBRATOR_CHECK_POINTS: usize = 2000;
/// Slack allowed on the integral of a user calibrator.
const CALIBRATOR_INTEGRAL_SLACK: f64 = 1e-6;

impl<F: Fn(f64) -> f64> CheckedCalibrator<F> {
    /// Accepts `f` if it is nonnegative and nonincreasing on a fine grid of
    /// (0,1] and integrates to at most 1.
    pub fn new(f: F) -> Result<Self> {
        let mut prev = f64::INFINITY;
        for i in 1..=CALIBRATOR_CHECK_POINTS {
            let t = i as f64 / CALIBRATOR_CHECK_POINTS as f64;
            let v = f(t);
            if !(v >= 0.0) {
                return Err(Error::domain(format!(
                    "calibrator is negative or NaN at {t}"
                )));
            }
            if v > prev {
                return Err(Error::domain(format!("calibrator increases at {t}")));
            }
            prev = v;
        }
        let integral = quadrature::integrate_unit(&f);
        if !(integral <= 1.0 + CALIBRATOR_INTEGRAL_SLACK) {
            return Err(Error::domain(format!(
                "calibrator integrates to {integral}, must be at most 1"
            )));
        }
        Ok(CheckedCalibrator { f })
    }
}

impl<F: Fn(f64) -> f64> Calibrator for CheckedCalibrator<F> {
    fn calibrate_one(&self, p: f64) -> f64 {
        (self.f)(p)
    }
}

/// Entrywise calibration of a p-vector.
pub fn calibrate<C: Calibrator + ?Sized>(p: &PVector, calibrator: &C) -> EVector {
    EVector::new(
        p.values()
            .iter()
            .map(|&x| calibrator.calibrate_one(x))
            .collect(),
    )
    .expect("calibrators are nonnegative")
}

/// Moment-generating-function family bounding a centred variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiFamily {
    /// `ψ(λ) = λ²/2` on all of ℝ.
    SubGaussian,
}

/// `X` is `v`-sub-ψ around mean `mu`: `E exp(λ(X − μ)) ≤ exp(ψ(λ) v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubPsiSpec {
    pub family: PsiFamily,
    pub v: f64,
    pub mu: f64,
}

impl SubPsiSpec {
    pub fn sub_gaussian(v: f64, mu: f64) -> Result<Self> {
        if !(v.is_finite() && v >= 0.0) || !mu.is_finite() {
            return Err(Error::domain(format!(
                "variance proxy must be finite and nonnegative (v={v}, mu={mu})"
            )));
        }
        Ok(SubPsiSpec {
            family: PsiFamily::SubGaussian,
            v,
            mu,
        })
    }

    pub fn psi(&self, lambda: f64) -> f64 {
        match self.family {
            PsiFamily::SubGaussian => 0.5 * lambda * lambda,
        }
    }

    /// Closed interval of admissible λ.
    pub fn lambda_domain(&self) -> (f64, f64) {
        match self.family {
            PsiFamily::SubGaussian => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
}

/// Chernoff e-variable `exp(Σ λ_i (x_i − μ_i) − Σ ψ_i(λ_i) v_i)`.
pub fn chernoff_e(x: &[f64], specs: &[SubPsiSpec], lambdas: &[f64]) -> Result<f64> {
    if x.len() != specs.len() || x.len() != lambdas.len() {
        return Err(Error::input(format!(
            "length mismatch: {} observations, {} specs, {} lambdas",
            x.len(),
            specs.len(),
            lambdas.len()
        )));
    }
    for (s, &l) in specs.iter().zip(lambdas) {
        let (lo, hi) = s.lambda_domain();
        if !(l >= lo && l <= hi) || !l.is_finite() {
            return Err(Error::domain(format!(
                "lambda {l} outside the domain of psi"
            )));
        }
    }
    Ok(chernoff_unchecked(x, specs, lambdas))
}

pub(crate) fn chernoff_unchecked(x: &[f64], specs: &[SubPsiSpec], lambdas: &[f64]) -> f64 {
    let exponent: f64 = x
        .iter()
        .zip(specs)
        .zip(lambdas)
        .map(|((&xi, s), &l)| l * (xi - s.mu) - s.psi(l) * s.v)
        .sum();
    exponent.exp()
}

/// Bet size `√(2 ln(1/α) / (n v))` that turns the homogeneous sub-Gaussian
/// Chernoff e-value into Hoeffding's inequality.
pub fn hoeffding_lambda(alpha: f64, n: usize, v: f64) -> Result<f64> {
    crate::error::check_alpha(alpha)?;
    if n == 0 || !(v > 0.0) {
        return Err(Error::domain("need n >= 1 and v > 0"));
    }
    Ok((2.0 * (1.0 / alpha).ln() / (n as f64 * v)).sqrt())
}

/// Deviation `√(2 v ln(1/α) / n)` of the sample mean exceeded with
/// probability at most α.
pub fn hoeffding_threshold(alpha: f64, n: usize, v: f64) -> Result<f64> {
    crate::error::check_alpha(alpha)?;
    if n == 0 || !(v > 0.0) {
        return Err(Error::domain("need n >= 1 and v > 0"));
    }
    Ok((2.0 * v * (1.0 / alpha).ln() / n as f64).sqrt())
}

pub mod quadrature {
    //! Tanh-sinh quadrature on [0,1]; tolerates integrable endpoint
    //! singularities such as `t^(κ−1)`.

    const STEP: f64 = 1.0 / 64.0;
    const HALF_WIDTH: f64 = 6.0;

    /// `∫₀¹ f(t) dt`.
    pub fn integrate_unit<F: Fn(f64) -> f64>(f: F) -> f64 {
        let n = (HALF_WIDTH / STEP) as i64;
        let mut sum = 0.0;
        let mut comp = 0.0;
        for i in -n..=n {
            let t = i as f64 * STEP;
            let u = std::f64::consts::FRAC_PI_2 * t.sinh();
            // x = 1/(1+e^{-2u}) and 1−x, each computed without cancellation
            let (x, one_minus_x) = if u < 0.0 {
                let e = (2.0 * u).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = (-2.0 * u).exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            if x <= 0.0 || one_minus_x <= 0.0 {
                continue;
            }
            let w = std::f64::consts::PI * t.cosh() * x * one_minus_x;
            let term = w * f(x) - comp;
            let next = sum + term;
            comp = (next - sum) - term;
            sum = next;
        }
        sum * STEP
    }
}
