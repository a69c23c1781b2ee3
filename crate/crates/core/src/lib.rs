//! Dependence-aware minority oversampling.
//!
//! The crate fits a truncated regular-vine copula to the minority class of a
//! training fold, samples new pseudo-observations from it, and maps them back
//! to feature space through the empirical inverse CDF of each column. The
//! surrounding modules provide the interpolation baselines (SMOTE,
//! Borderline-SMOTE, ADASYN), leakage-free fold preprocessing, a logistic
//! regression evaluator, the 5x2 cross-validation paired t-test and an
//! experiment runner that ties the pieces together.

// `!(x > 0.0)` is used on purpose so NaN is rejected too; published
// coefficient tables keep their full printed precision.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod eval;
pub mod matrix;
pub mod numerics;
pub mod pair_copula;
pub mod preprocess;
pub mod resampling;
pub mod runner;
pub mod vine;

pub use error::{Error, Result};
pub use matrix::Matrix;

/// Class identifier for binary labels.
pub type Label = u8;
