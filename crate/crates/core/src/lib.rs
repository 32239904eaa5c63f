//! Merging p-values and e-values under negative dependence.
//!
//! The crate is organised around five pieces:
//!
//! * [`types`] holds the validated domain types shared by everything else
//!   ([`PVector`], [`EVector`], [`CorrMatrix`], ...).
//! * [`pmerge`] implements the Simes and weighted Simes combinations and the
//!   type-1 error bounds that hold when the p-values are weakly negatively
//!   dependent.
//! * [`emerge`] merges e-values: products, λ-products, U-statistics, convex
//!   combinations, calibration and Chernoff e-variables.
//! * [`fdr`] runs the Benjamini–Hochberg procedure and its variants and
//!   reports the FDR bounds under negative dependence.
//! * [`gendep`] and [`mc`] sample negatively dependent vectors and check
//!   every bound above by seeded, thread-count-independent Monte Carlo.

pub mod emerge;
pub mod error;
pub mod fdr;
pub mod gendep;
pub mod mc;
pub mod pmerge;
pub mod rng;
pub mod types;

pub use error::{Error, Result};
pub use rng::RngSeed;
pub use types::{
    harmonic_ell, order_statistics, CorrMatrix, EVector, GroupPartition, McEstimate, NullMask,
    PVector, RejectionSet, WeightVector,
};
