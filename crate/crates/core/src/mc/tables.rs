//! Closed-form tables of the Simes and BH bounds under negative dependence.
//!
//! CSV output is byte-stable: the rounded columns use the printed precision
//! of the published tables and the `_exact` columns use 10 decimals.

use serde::Serialize;

use crate::fdr::bh_fdr_bound_negdep;
use crate::pmerge::{simes_bound_cubic, simes_bound_tilde};

/// Levels of the Simes bound table; 0.0098, 0.0454 and 0.0830 are the
/// preimages of 0.01, 0.05 and 0.1 under `s̃`.
pub const TABLE1_ALPHAS: [f64; 6] = [0.0098, 0.01, 0.0454, 0.05, 0.0830, 0.1];
pub const TABLE2_ALPHAS: [f64; 3] = [0.01, 0.05, 0.1];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table1Row {
    pub alpha: f64,
    pub tilde_s: f64,
    pub cubic: f64,
    /// `s̃(α)/α` with `s̃` rounded to 4 decimals first, as tabulated.
    pub ratio: f64,
    pub ratio_exact: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table2Row {
    pub alpha: f64,
    pub fdr_bound: f64,
    pub ratio: f64,
}

fn round_to(x: f64, decimals: usize) -> f64 {
    format!("{x:.decimals$}")
        .parse()
        .expect("formatted float parses")
}

pub fn reproduce_table1() -> Vec<Table1Row> {
    TABLE1_ALPHAS
        .iter()
        .map(|&alpha| {
            let tilde_s = simes_bound_tilde(alpha).expect("alpha in (0,1)");
            Table1Row {
                alpha,
                tilde_s,
                cubic: simes_bound_cubic(alpha).expect("alpha <= 0.1"),
                ratio: round_to(tilde_s, 4) / alpha,
                ratio_exact: tilde_s / alpha,
            }
        })
        .collect()
}

pub fn reproduce_table2() -> Vec<Table2Row> {
    TABLE2_ALPHAS
        .iter()
        .map(|&alpha| {
            let fdr_bound = bh_fdr_bound_negdep(alpha, 1)
                .expect("alpha in (0,1)")
                .su_neg_bound;
            Table2Row {
                alpha,
                fdr_bound,
                ratio: fdr_bound / alpha,
            }
        })
        .collect()
}

pub fn table1_csv(rows: &[Table1Row]) -> String {
    let mut out = String::from("alpha,tilde_s,cubic,ratio,tilde_s_exact,cubic_exact,ratio_exact\n");
    for r in rows {
        out.push_str(&format!(
            "{:.4},{:.4},{:.4},{:.3},{:.10},{:.10},{:.10}\n",
            r.alpha, r.tilde_s, r.cubic, r.ratio, r.tilde_s, r.cubic, r.ratio_exact
        ));
    }
    out
}

pub fn table2_csv(rows: &[Table2Row]) -> String {
    let mut out = String::from("alpha,fdr_bound,ratio,fdr_bound_exact,ratio_exact\n");
    for r in rows {
        out.push_str(&format!(
            "{:.2},{:.5},{:.3},{:.10},{:.10}\n",
            r.alpha, r.fdr_bound, r.ratio, r.fdr_bound, r.ratio
        ));
    }
    out
}
