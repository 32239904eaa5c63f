//! Validated domain types and shared numeric conventions.
//!
//! Every type is immutable once built; constructors enforce the invariants
//! so downstream code never re-checks them.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Allowed deviation of a weight vector's sum from `K`.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;
/// Allowed asymmetry `|Σ_ij − Σ_ji|` of a correlation matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Allowed deviation of a correlation matrix's diagonal from 1.
pub const DIAGONAL_TOL: f64 = 1e-12;
/// Most negative eigenvalue tolerated before a matrix is rejected as not PSD.
pub const PSD_SLACK: f64 = 1e-10;
/// Allowed deviation of convex-combination weights from summing to one.
pub const CONVEX_SUM_TOL: f64 = 1e-9;

/// Indices of `values` sorted ascending by `(value, original index)`.
pub(crate) fn stable_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    // sort_by is stable, so equal values keep index order
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    idx
}

/// A vector of `K ≥ 1` probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct PVector(Vec<f64>);

impl PVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("p-vector must contain at least one value"));
        }
        if let Some((i, p)) = values
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(Error::domain(format!(
                "p-value at position {} is not in [0,1]: {p}",
                i + 1
            )));
        }
        Ok(PVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Positions of the values in ascending order, ties broken by position.
    pub fn order(&self) -> Vec<usize> {
        stable_order(&self.0)
    }

    /// Restriction to the given positions (in the order given).
    pub fn select(&self, positions: &[usize]) -> Result<PVector> {
        let mut out = Vec::with_capacity(positions.len());
        for &i in positions {
            let v = self.0.get(i).ok_or_else(|| {
                Error::input(format!("index {} out of range for K={}", i + 1, self.len()))
            })?;
            out.push(*v);
        }
        PVector::new(out)
    }
}

/// Ascending order statistics `p₍₁₎ ≤ … ≤ p₍K₎`.
pub fn order_statistics(p: &PVector) -> Vec<f64> {
    let mut v = p.0.clone();
    v.sort_by(f64::total_cmp);
    v
}

/// Harmonic number `ℓ_K = Σ_{k=1}^K 1/k`, summed smallest term first.
pub fn harmonic_ell(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("harmonic number needs K >= 1"));
    }
    Ok((1..=k).rev().map(|i| 1.0 / i as f64).sum())
}

/// A vector of nonnegative e-values; `+∞` is allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct EVector(Vec<f64>);

impl EVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, e)) = values.iter().enumerate().find(|(_, e)| !(**e >= 0.0)) {
            return Err(Error::domain(format!(
                "e-value at position {} must be nonnegative, got {e}",
                i + 1
            )));
        }
        Ok(EVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Prior weights on the scaled simplex `Δ_K = {w ≥ 0 : Σw = K}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::input("weight vector must not be empty"));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
        {
            return Err(Error::domain(format!(
                "weight at position {} must be finite and nonnegative, got {w}",
                i + 1
            )));
        }
        let k = weights.len() as f64;
        let sum: f64 = weights.iter().sum();
        if (sum - k).abs() > WEIGHT_SUM_TOL {
            return Err(Error::domain(format!(
                "weights must sum to K={k}, got {sum}"
            )));
        }
        Ok(WeightVector(weights))
    }

    /// All-ones weights.
    pub fn uniform(k: usize) -> Result<Self> {
        WeightVector::new(vec![1.0; k])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Which hypotheses are true nulls.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NullMask(Vec<bool>);

impl NullMask {
    pub fn new(is_null: Vec<bool>) -> Self {
        NullMask(is_null)
    }

    pub fn all_null(k: usize) -> Self {
        NullMask(vec![true; k])
    }

    pub fn is_null(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of true nulls `K₀`.
    pub fn k0(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }
}

/// A `K×K` Gaussian correlation matrix: symmetric, unit diagonal, PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrMatrix {
    entries: DMatrix<f64>,
    min_eigenvalue: f64,
}

impl CorrMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let k = entries.nrows();
        if k == 0 || entries.ncols() != k {
            return Err(Error::input(format!(
                "correlation matrix must be square and nonempty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::input("correlation matrix has non-finite entries"));
        }
        for i in 0..k {
            if (entries[(i, i)] - 1.0).abs() > DIAGONAL_TOL {
                return Err(Error::domain(format!(
                    "diagonal entry {} is {}, expected 1",
                    i + 1,
                    entries[(i, i)]
                )));
            }
            for j in (i + 1)..k {
                if (entries[(i, j)] - entries[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(Error::domain(format!(
                        "matrix is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let min_eigenvalue = SymmetricEigen::new(entries.clone()).eigenvalues.min();
        if min_eigenvalue < -PSD_SLACK {
            return Err(Error::NotPsd { min_eigenvalue });
        }
        Ok(CorrMatrix {
            entries,
            min_eigenvalue,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::input("correlation matrix rows have unequal lengths"));
        }
        CorrMatrix::new(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
    }

    pub fn identity(k: usize) -> Result<Self> {
        CorrMatrix::new(DMatrix::identity(k, k))
    }

    /// Equicorrelation matrix with off-diagonal `rho`; PSD iff `rho ≥ −1/(K−1)`.
    pub fn equicorrelation(k: usize, rho: f64) -> Result<Self> {
        CorrMatrix::new(DMatrix::from_fn(
            k,
            k,
            |i, j| if i == j { 1.0 } else { rho },
        ))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    /// Whether `Σ_ij ≤ 0` for every `i ≠ j`.
    pub fn all_offdiag_nonpositive(&self) -> bool {
        let k = self.dim();
        (0..k).all(|i| (0..k).all(|j| i == j || self.entries[(i, j)] <= 0.0))
    }
}

/// Output of a step-up procedure: rejected positions (0-based, ascending)
/// and the step-up count `k*`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RejectionSet {
    rejected: Vec<usize>,
    k_star: usize,
}

impl RejectionSet {
    pub(crate) fn new(mut rejected: Vec<usize>) -> Self {
        rejected.sort_unstable();
        rejected.dedup();
        let k_star = rejected.len();
        RejectionSet { rejected, k_star }
    }

    pub fn empty() -> Self {
        RejectionSet {
            rejected: Vec::new(),
            k_star: 0,
        }
    }

    pub fn rejected(&self) -> &[usize] {
        &self.rejected
    }

    /// Rejected positions numbered from 1, as shown to users.
    pub fn one_based(&self) -> Vec<usize> {
        self.rejected.iter().map(|i| i + 1).collect()
    }

    pub fn k_star(&self) -> usize {
        self.k_star
    }

    pub fn contains(&self, i: usize) -> bool {
        self.rejected.binary_search(&i).is_ok()
    }

    pub fn is_empty(&self) -> bool {
        self.k_star == 0
    }

    pub fn is_subset_of(&self, other: &RejectionSet) -> bool {
        self.rejected.iter().all(|&i| other.contains(i))
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub reps: u64,
    pub seed: u64,
}

impl McEstimate {
    /// Probability estimate `hits / reps` with binomial standard error.
    pub fn from_count(hits: u64, reps: u64, seed: u64) -> Self {
        assert!(reps > 0 && hits <= reps);
        let p = hits as f64 / reps as f64;
        McEstimate {
            estimate: p,
            std_error: (p * (1.0 - p) / reps as f64).sqrt(),
            reps,
            seed,
        }
    }

    /// Mean estimate with standard error `sd / sqrt(reps)`.
    pub fn from_mean(mean: f64, sample_sd: f64, reps: u64, seed: u64) -> Self {
        assert!(reps > 0);
        McEstimate {
            estimate: mean,
            std_error: sample_sd / (reps as f64).sqrt(),
            reps,
            seed,
        }
    }
}

/// Disjoint, nonempty groups of hypothesis positions (0-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPartition {
    groups: Vec<Vec<usize>>,
}

impl GroupPartition {
    /// Builds a partition over `{0..k-1}`; groups need not cover every index.
    pub fn new(groups: Vec<Vec<usize>>, k: usize) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::input("at least one group is required"));
        }
        let mut seen = vec![false; k];
        for (g, members) in groups.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::input(format!("group {} is empty", g + 1)));
            }
            for &i in members {
                if i >= k {
                    return Err(Error::input(format!(
                        "group {} refers to index {} but K={k}",
                        g + 1,
                        i + 1
                    )));
                }
                if seen[i] {
                    return Err(Error::domain(format!("groups overlap at index {}", i + 1)));
                }
                seen[i] = true;
            }
        }
        Ok(GroupPartition { groups })
    }

    /// Groups positions by label, groups numbered by first appearance.
    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Result<(Self, Vec<String>)> {
        let mut names: Vec<String> = Vec::new();
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (i, l) in labels.iter().enumerate() {
            let l = l.as_ref();
            match names.iter().position(|n| n == l) {
                Some(g) => groups[g].push(i),
                None => {
                    names.push(l.to_string());
                    groups.push(vec![i]);
                }
            }
        }
        Ok((GroupPartition::new(groups, labels.len())?, names))
    }

    pub fn singletons(k: usize) -> Self {
        GroupPartition {
            groups: (0..k).map(|i| vec![i]).collect(),
        }
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pv(v: &[f64]) -> PVector {
        PVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn order_statistics_examples() {
        assert_eq!(order_statistics(&pv(&[0.5, 0.1, 0.3])), vec![0.1, 0.3, 0.5]);
        assert_eq!(order_statistics(&pv(&[0.2, 0.2])), vec![0.2, 0.2]);
        assert_eq!(order_statistics(&pv(&[0.9])), vec![0.9]);
    }

    #[test]
    fn order_breaks_ties_by_position() {
        assert_eq!(pv(&[0.2, 0.1, 0.2, 0.1]).order(), vec![1, 3, 0, 2]);
    }

    #[test]
    fn pvector_rejects_bad_values() {
        assert!(PVector::new(vec![]).is_err());
        assert!(PVector::new(vec![0.5, 1.5]).unwrap_err().is_domain());
        assert!(PVector::new(vec![f64::NAN]).is_err());
        assert!(PVector::new(vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn harmonic_examples() {
        assert_eq!(harmonic_ell(1).unwrap(), 1.0);
        assert_eq!(harmonic_ell(2).unwrap(), 1.5);
        // 1 + 1/2 + 1/3 + 1/4 = 25/12
        assert!((harmonic_ell(4).unwrap() - 25.0 / 12.0).abs() < 1e-15);
        assert!(harmonic_ell(0).is_err());
    }

    #[test]
    fn harmonic_minus_log_band() {
        let mut prev = 0.0;
        for k in 1..=5000 {
            let h = harmonic_ell(k).unwrap();
            assert!(h > prev);
            let gap = h - (k as f64).ln();
            assert!(gap > 0.5 && gap <= 1.0, "K={k} gap={gap}");
            prev = h;
        }
    }

    #[test]
    fn evector_and_weights() {
        assert!(EVector::new(vec![0.0, f64::INFINITY]).is_ok());
        assert!(EVector::new(vec![-1.0]).is_err());
        assert!(EVector::new(vec![f64::NAN]).is_err());
        assert!(WeightVector::new(vec![2.0, 0.0]).is_ok());
        assert!(WeightVector::new(vec![1.0, 0.5]).unwrap_err().is_domain());
        assert!(WeightVector::new(vec![2.5, -0.5]).is_err());
        assert!(WeightVector::new(vec![1.0 + 5e-10, 1.0]).is_ok());
    }

    #[test]
    fn corr_matrix_checks() {
        assert!(CorrMatrix::identity(3).unwrap().all_offdiag_nonpositive());
        let eq = CorrMatrix::equicorrelation(3, -0.5).unwrap();
        assert!(eq.all_offdiag_nonpositive());
        assert!(eq.min_eigenvalue().abs() < 1e-12);
        assert!(matches!(
            CorrMatrix::equicorrelation(3, -0.6),
            Err(Error::NotPsd { .. })
        ));
        assert!(!CorrMatrix::equicorrelation(3, 0.2)
            .unwrap()
            .all_offdiag_nonpositive());
        assert!(CorrMatrix::from_rows(&[vec![1.0, 0.1], vec![0.2, 1.0]]).is_err());
        assert!(CorrMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).is_err());
        assert!(CorrMatrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).is_ok());
    }

    #[test]
    fn groups_must_be_disjoint() {
        assert!(GroupPartition::new(vec![vec![0, 1], vec![1]], 3)
            .unwrap_err()
            .is_domain());
        assert!(GroupPartition::new(vec![vec![]], 3).is_err());
        assert!(GroupPartition::new(vec![vec![3]], 3).is_err());
        let (g, names) = GroupPartition::from_labels(&["b", "a", "b"]).unwrap();
        assert_eq!(g.groups(), &[vec![0, 2], vec![1]]);
        assert_eq!(names, vec!["b", "a"]);
    }

    #[test]
    fn mc_estimate_binomial_se() {
        let m = McEstimate::from_count(50, 1000, 7);
        assert!((m.std_error - (0.05f64 * 0.95 / 1000.0).sqrt()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn order_statistics_sorted_permutation(v in proptest::collection::vec(0.0f64..=1.0, 1..40)) {
            let p = pv(&v);
            let s = order_statistics(&p);
            prop_assert!(s.windows(2).all(|w| w[0] <= w[1]));
            let mut a = v.clone();
            a.sort_by(f64::total_cmp);
            prop_assert_eq!(&a, &s);
            prop_assert_eq!(order_statistics(&pv(&s)), s);
        }
    }
}
