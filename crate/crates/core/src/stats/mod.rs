//! Statistical procedures for the listening-study analysis: accuracy and
//! quality scores, t-tests, one-way and repeated-measures ANOVA,
//! Mann–Whitney U, Shapiro–Wilk, Benjamini–Hochberg and Pearson correlation.
//!
//! Every test returns a [`TestResult`]; degenerate inputs (zero variance and
//! the like) are reported with `degenerate = true` rather than as errors where
//! a p-value is still meaningful.

mod anova;
mod descriptive;
mod fdr;
mod parametric;
mod rank;
mod scores;
mod shapiro;
pub mod special;

pub use anova::{one_way_anova, repeated_measures_anova, RepeatedMeasuresTable};
pub use descriptive::{mean, mean_sd, sample_sd};
pub use fdr::{bh_fdr, FdrOutcome};
pub use parametric::{paired_t_test, pearson_correlation, unpaired_t_test};
pub use rank::{mann_whitney_u, mann_whitney_null_counts, midranks, MannWhitney, MwMode, EXACT_MAX_N};
pub use scores::{accuracy, degradation_scores, normalized_quality_score};
pub use shapiro::shapiro_wilk;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("no trials")]
    EmptyTrials,
    #[error("correct count {correct} exceeds total {total}")]
    InvalidCount { correct: u64, total: u64 },
    #[error("sample lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("empty sample")]
    EmptySample,
    #[error("need at least two groups of two observations")]
    TooFewGroups,
    #[error("incomplete table: {0}")]
    IncompleteTable(String),
    #[error("zero variance")]
    ZeroVariance,
    #[error("sample size {0} outside 3..=5000")]
    SampleTooSmall(usize),
    #[error("constant sample")]
    ConstantSample,
    #[error("exact Mann–Whitney test is unavailable: {0}")]
    ExactUnavailable(String),
    #[error("p-value {0} outside [0, 1]")]
    InvalidP(f64),
    #[error("alpha {0} outside (0, 1)")]
    InvalidAlpha(f64),
    #[error("rating {0} outside 1..=5")]
    OutOfRangeRating(u8),
    #[error("keys do not match: {0}")]
    KeyMismatch(String),
    #[error("non-finite observation")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PairedT,
    WelchT,
    RepeatedMeasuresAnova,
    OneWayAnova,
    MannWhitneyExact,
    MannWhitneyNormal,
    ShapiroWilk,
    Pearson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult<T> {
    pub method: Method,
    /// t, F, U, W or r depending on `method`.
    pub statistic: T,
    /// Empty for U and W, one value for t and r, two for F.
    pub df: Vec<T>,
    pub p_value: T,
    /// Set when the statistic is undefined or infinite (zero variance).
    pub degenerate: bool,
}

impl<T> TestResult<T> {
    pub(crate) fn new(method: Method, statistic: T, df: Vec<T>, p_value: T) -> Self {
        Self { method, statistic, df, p_value, degenerate: false }
    }

    pub(crate) fn degenerate(method: Method, statistic: T, df: Vec<T>, p_value: T) -> Self {
        Self { method, statistic, df, p_value, degenerate: true }
    }
}

pub(crate) fn check_finite<T: crate::Real>(xs: &[T]) -> Result<(), StatsError> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}
