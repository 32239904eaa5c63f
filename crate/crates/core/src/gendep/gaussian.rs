//! Latent-Gaussian p-values and the cyclical-difference construction.

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::types::{CorrMatrix, PVector, PSD_SLACK};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// How a [`GaussianFactor`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorKind {
    Cholesky,
    /// `V diag(√max(λ,0))`, used when Σ is singular or nearly so.
    Eigen,
}

/// A matrix `L` with `L Lᵀ = Σ`.
#[derive(Debug, Clone)]
pub struct GaussianFactor {
    factor: DMatrix<f64>,
    kind: FactorKind,
}

impl GaussianFactor {
    /// Cholesky when it succeeds with finite entries. Otherwise a spectral
    /// factor with eigenvalues in `[−PSD_SLACK, 0)` set to zero; that keeps
    /// rank-deficient matrices such as `ρ = −1` exact, so `Y₂ = −Y₁` there.
    pub fn new(sigma: &CorrMatrix) -> Self {
        let m = sigma.entries().clone();
        if let Some(ch) = m.clone().cholesky() {
            let l = ch.unpack();
            if l.iter().all(|x| x.is_finite()) {
                return GaussianFactor {
                    factor: l,
                    kind: FactorKind::Cholesky,
                };
            }
        }
        let eig = SymmetricEigen::new(m);
        let mut v = eig.eigenvectors;
        for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
            debug_assert!(lambda >= -PSD_SLACK);
            let s = lambda.max(0.0).sqrt();
            v.column_mut(j).scale_mut(s);
        }
        GaussianFactor {
            factor: v,
            kind: FactorKind::Eigen,
        }
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn kind(&self) -> FactorKind {
        self.kind
    }

    /// Writes `Y = shift + L Z` into `out`; `z` is scratch of length K.
    pub fn sample_latent<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        shift: &[f64],
        z: &mut [f64],
        out: &mut [f64],
    ) {
        let k = self.dim();
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(rng);
        }
        for (i, yi) in out.iter_mut().enumerate().take(k) {
            let mut acc = shift.get(i).copied().unwrap_or(0.0);
            let row_len = if self.kind == FactorKind::Cholesky {
                i + 1
            } else {
                k
            };
            for (j, zj) in z.iter().enumerate().take(row_len) {
                acc += self.factor[(i, j)] * zj;
            }
            *yi = acc;
        }
    }
}

pub(crate) fn check_shift(shift: &[f64], k: usize) -> Result<()> {
    if !shift.is_empty() && shift.len() != k {
        return Err(Error::input(format!(
            "shift has {} entries but K={k}",
            shift.len()
        )));
    }
    if let Some(s) = shift.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(Error::domain(format!(
            "shift entries must be finite and nonnegative, got {s}"
        )));
    }
    Ok(())
}

/// One draw of `P_k = Φ(−Y_k)` with `Y ~ N(shift, Σ)` and `Σ_ij ≤ 0` off
/// the diagonal. Null coordinates (`shift_k = 0`) are exactly uniform.
pub fn sample_neg_gaussian_p<R: Rng + ?Sized>(
    sigma: &CorrMatrix,
    shift: &[f64],
    rng: &mut R,
) -> Result<PVector> {
    if !sigma.all_offdiag_nonpositive() {
        return Err(Error::domain(
            "correlation matrix has positive off-diagonal entries",
        ));
    }
    let k = sigma.dim();
    check_shift(shift, k)?;
    let factor = GaussianFactor::new(sigma);
    let mut z = vec![0.0; k];
    let mut y = vec![0.0; k];
    factor.sample_latent(rng, shift, &mut z, &mut y);
    PVector::new(y.iter().map(|&v| normal_cdf(-v)).collect())
}

/// A random correlation matrix `I − t A / λ_max(A)` where `A` has iid
/// Uniform(0,1) off-diagonal entries and `t ~ Uniform(0.5, 0.999)`.
/// Off-diagonals are nonpositive and the smallest eigenvalue is `1 − t`.
pub fn random_nonpositive_corr<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<CorrMatrix> {
    if k == 0 {
        return Err(Error::input("K must be at least 1"));
    }
    if k == 1 {
        return CorrMatrix::identity(1);
    }
    let unit = Uniform::new(0.0, 1.0).expect("valid range");
    let mut a = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in (i + 1)..k {
            let x: f64 = unit.sample(rng);
            a[(i, j)] = x;
            a[(j, i)] = x;
        }
    }
    let lambda_max = SymmetricEigen::new(a.clone()).eigenvalues.max();
    let t = rng.random_range(0.5..0.999);
    let scale = if lambda_max > 0.0 {
        t / lambda_max
    } else {
        0.0
    };
    let sigma = DMatrix::from_fn(k, k, |i, j| if i == j { 1.0 } else { -scale * a[(i, j)] });
    CorrMatrix::new(sigma)
}

/// `P_i = Φ((X_i − X_{i+1})/√2)` with `X` iid standard normal and indices
/// mod K. Each `P_i` is uniform and the vector is negatively orthant
/// dependent.
pub fn sample_cyclical_pvalues<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<PVector> {
    if k < 2 {
        return Err(Error::input("cyclical construction needs K >= 2"));
    }
    let mut x = vec![0.0; k];
    let mut out = vec![0.0; k];
    draw_cyclical(rng, &mut x, &mut out);
    PVector::new(out)
}

pub(crate) fn draw_cyclical<R: Rng + ?Sized>(rng: &mut R, x: &mut [f64], out: &mut [f64]) {
    for xi in x.iter_mut() {
        *xi = StandardNormal.sample(rng);
    }
    let k = x.len();
    for i in 0..k {
        out[i] = normal_cdf((x[i] - x[(i + 1) % k]) / SQRT_2);
    }
}
