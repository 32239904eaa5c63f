//! Comparing Monte Carlo estimates with bounds.

use serde::{Deserialize, Serialize};

use crate::types::McEstimate;

/// Default tolerance in standard errors.
pub const DEFAULT_MARGIN_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CheckKind {
    /// `estimate ≤ bound + margin·SE`.
    Upper,
    /// `|estimate − bound| ≤ margin·SE`.
    TwoSided,
    /// `lower − margin·SE ≤ estimate ≤ bound + margin·SE`.
    Interval { lower: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationResult {
    /// What was checked, e.g. `"K=10 alpha=0.05"`.
    pub label: String,
    pub estimate: McEstimate,
    pub bound: f64,
    pub bound_name: String,
    pub kind: CheckKind,
    pub margin_sigmas: f64,
    /// `(estimate − bound) / SE`; positive means above the bound.
    pub excess_sigmas: f64,
    pub pass: bool,
}

fn excess(est: &McEstimate, bound: f64) -> f64 {
    let d = est.estimate - bound;
    if d == 0.0 {
        0.0
    } else if est.std_error > 0.0 {
        d / est.std_error
    } else {
        d.signum() * f64::INFINITY
    }
}

fn result(
    est: McEstimate,
    bound: f64,
    bound_name: &str,
    kind: CheckKind,
    margin_sigmas: f64,
    pass: bool,
) -> VerificationResult {
    VerificationResult {
        label: String::new(),
        excess_sigmas: excess(&est, bound),
        estimate: est,
        bound,
        bound_name: bound_name.to_owned(),
        kind,
        margin_sigmas,
        pass,
    }
}

/// One-sided check `estimate ≤ bound + margin·SE`.
pub fn verify(est: McEstimate, bound: f64, margin_sigmas: f64) -> VerificationResult {
    verify_named(est, bound, "bound", margin_sigmas)
}

pub fn verify_named(
    est: McEstimate,
    bound: f64,
    bound_name: &str,
    margin_sigmas: f64,
) -> VerificationResult {
    let pass = est.estimate <= bound + margin_sigmas * est.std_error;
    result(
        est,
        bound,
        bound_name,
        CheckKind::Upper,
        margin_sigmas,
        pass,
    )
}

/// Check `|estimate − target| ≤ margin·SE`.
pub fn verify_two_sided(
    est: McEstimate,
    target: f64,
    bound_name: &str,
    margin_sigmas: f64,
) -> VerificationResult {
    let pass = (est.estimate - target).abs() <= margin_sigmas * est.std_error;
    result(
        est,
        target,
        bound_name,
        CheckKind::TwoSided,
        margin_sigmas,
        pass,
    )
}

/// Check `lower − margin·SE ≤ estimate ≤ upper + margin·SE`.
pub fn verify_interval(
    est: McEstimate,
    lower: f64,
    upper: f64,
    bound_name: &str,
    margin_sigmas: f64,
) -> VerificationResult {
    let slack = margin_sigmas * est.std_error;
    let pass = est.estimate >= lower - slack && est.estimate <= upper + slack;
    result(
        est,
        upper,
        bound_name,
        CheckKind::Interval { lower },
        margin_sigmas,
        pass,
    )
}

impl VerificationResult {
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}
