//! Empirical check of weak negative dependence,
//! `P(X_k ≤ x for all k ∈ A) ≤ ∏_{k∈A} P(X_k ≤ x)`.
//!
//! Finite samples cannot establish the property; the report only flags
//! gaps that are positive beyond three standard errors.

use serde::Serialize;

use crate::error::{Error, Result};

/// Fewest draws accepted by [`wnd_diagnostic`].
pub const MIN_DIAGNOSTIC_SAMPLES: usize = 10_000;
/// Gaps above this many standard errors are flagged.
pub const FLAG_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticMode {
    /// Flags are informational; the report always passes.
    Exploratory,
    /// Any flag fails the report.
    Verification,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WndEntry {
    /// 1-based coordinates.
    pub subset: Vec<usize>,
    pub x: f64,
    pub joint: f64,
    pub product: f64,
    /// `joint − product`.
    pub gap: f64,
    /// Delta-method standard error of `gap`.
    pub std_error: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WndReport {
    pub n_samples: usize,
    pub mode: DiagnosticMode,
    pub entries: Vec<WndEntry>,
}

impl WndReport {
    pub fn flagged(&self) -> usize {
        self.entries.iter().filter(|e| e.flagged).count()
    }

    pub fn pass(&self) -> bool {
        self.mode == DiagnosticMode::Exploratory || self.flagged() == 0
    }

    /// Largest `gap / std_error` over entries with positive standard error.
    pub fn max_z(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.std_error > 0.0)
            .map(|e| e.gap / e.std_error)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Estimates the orthant gap for every `(A, x)`; `samples` holds one draw
/// per row and `subsets` are 0-based sets of at least two coordinates.
pub fn wnd_diagnostic(
    samples: &[Vec<f64>],
    thresholds: &[f64],
    subsets: &[Vec<usize>],
    mode: DiagnosticMode,
) -> Result<WndReport> {
    let n = samples.len();
    if n < MIN_DIAGNOSTIC_SAMPLES {
        return Err(Error::input(format!(
            "need at least {MIN_DIAGNOSTIC_SAMPLES} samples, got {n}"
        )));
    }
    let k = samples[0].len();
    if samples.iter().any(|r| r.len() != k) {
        return Err(Error::input("sample rows have unequal lengths"));
    }
    if thresholds.is_empty() || thresholds.iter().any(|x| !x.is_finite()) {
        return Err(Error::input("threshold grid must be nonempty and finite"));
    }
    if subsets.is_empty() {
        return Err(Error::input("no subsets given"));
    }
    for a in subsets {
        let mut s = a.clone();
        s.sort_unstable();
        s.dedup();
        if s.len() < 2 || s.len() != a.len() || s[s.len() - 1] >= k {
            return Err(Error::input(format!(
                "subset {:?} must hold at least two distinct coordinates in 1..={k}",
                a.iter().map(|i| i + 1).collect::<Vec<_>>()
            )));
        }
    }

    let nf = n as f64;
    let mut entries = Vec::with_capacity(thresholds.len() * subsets.len());
    for a in subsets {
        for &x in thresholds {
            let below = |row: &Vec<f64>, i: usize| (row[i] <= x) as u8 as f64;
            let marg: Vec<f64> = a
                .iter()
                .map(|&i| samples.iter().map(|r| below(r, i)).sum::<f64>() / nf)
                .collect();
            let joint = samples
                .iter()
                .filter(|r| a.iter().all(|&i| r[i] <= x))
                .count() as f64
                / nf;
            let product: f64 = marg.iter().product();
            // ∂(product)/∂p_k = ∏_{l≠k} p_l
            let partials: Vec<f64> = (0..a.len())
                .map(|m| {
                    marg.iter()
                        .enumerate()
                        .filter(|&(l, _)| l != m)
                        .map(|(_, p)| p)
                        .product()
                })
                .collect();
            let mut sum_sq = 0.0;
            for r in samples {
                let j = a.iter().all(|&i| r[i] <= x) as u8 as f64;
                let mut infl = j - joint;
                for (m, &i) in a.iter().enumerate() {
                    infl -= partials[m] * (below(r, i) - marg[m]);
                }
                sum_sq += infl * infl;
            }
            let std_error = (sum_sq / (nf - 1.0) / nf).sqrt();
            let gap = joint - product;
            entries.push(WndEntry {
                subset: a.iter().map(|i| i + 1).collect(),
                x,
                joint,
                product,
                gap,
                std_error,
                flagged: gap > FLAG_SIGMAS * std_error,
            });
        }
    }
    Ok(WndReport {
        n_samples: n,
        mode,
        entries,
    })
}
