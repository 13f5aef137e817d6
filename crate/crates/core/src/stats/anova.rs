use serde::{Deserialize, Serialize};

use super::special::f_sf;
use super::{check_finite, Method, StatsError, TestResult};
use crate::scalar::Real;

/// Subjects × conditions matrix for a one-way within-subjects design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatedMeasuresTable<T> {
    pub values: Vec<Vec<T>>,
    pub subject_ids: Vec<String>,
    pub condition_ids: Vec<String>,
}

impl<T: Real> RepeatedMeasuresTable<T> {
    pub fn new(values: Vec<Vec<T>>, subject_ids: Vec<String>, condition_ids: Vec<String>) -> Result<Self, StatsError> {
        if values.len() != subject_ids.len() {
            return Err(StatsError::IncompleteTable(format!(
                "{} rows for {} subjects",
                values.len(),
                subject_ids.len()
            )));
        }
        if values.len() < 2 || condition_ids.len() < 2 {
            return Err(StatsError::IncompleteTable("need at least 2 subjects and 2 conditions".into()));
        }
        for (row, id) in values.iter().zip(&subject_ids) {
            if row.len() != condition_ids.len() {
                return Err(StatsError::IncompleteTable(format!(
                    "subject {id} has {} of {} cells",
                    row.len(),
                    condition_ids.len()
                )));
            }
            check_finite(row)?;
        }
        Ok(Self { values, subject_ids, condition_ids })
    }

    /// Table with generated ids.
    pub fn from_rows(values: Vec<Vec<T>>) -> Result<Self, StatsError> {
        let s = values.len();
        let c = values.first().map_or(0, Vec::len);
        Self::new(
            values,
            (1..=s).map(|i| format!("S{i}")).collect(),
            (1..=c).map(|j| format!("C{j}")).collect(),
        )
    }

    pub fn subjects(&self) -> usize {
        self.values.len()
    }

    pub fn conditions(&self) -> usize {
        self.condition_ids.len()
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        self.values.iter().map(|r| r[j]).collect()
    }
}

/// Sums of squares below this fraction of the total are treated as zero.
fn negligible<T: Real>(ss: T, total: T) -> bool {
    ss <= T::epsilon() * T::lit(1024.0) * total
}

fn f_result<T: Real>(method: Method, ss_effect: T, ss_error: T, df1: T, df2: T) -> TestResult<T> {
    let total = ss_effect + ss_error;
    let df = vec![df1, df2];
    if negligible(ss_effect, total) {
        let degenerate = negligible(ss_error, total);
        let mut r = TestResult::new(method, T::zero(), df, T::one());
        r.degenerate = degenerate;
        return r;
    }
    if negligible(ss_error, total) {
        return TestResult::degenerate(method, T::infinity(), df, T::zero());
    }
    let f = (ss_effect / df1) / (ss_error / df2);
    TestResult::new(method, f, df.clone(), f_sf(f, df[0], df[1]))
}

/// Uncorrected one-way repeated-measures ANOVA:
/// `F = MS_conditions / MS_error` on `(c - 1, (c - 1)(s - 1))` degrees of freedom.
pub fn repeated_measures_anova<T: Real>(table: &RepeatedMeasuresTable<T>) -> Result<TestResult<T>, StatsError> {
    let (s, c) = (table.subjects(), table.conditions());
    if s < 2 || c < 2 || table.values.iter().any(|r| r.len() != c) {
        return Err(StatsError::IncompleteTable(format!("{s} subjects × {c} conditions")));
    }
    let (sf, cf) = (T::of_usize(s), T::of_usize(c));
    let grand = table.values.iter().flatten().copied().sum::<T>() / (sf * cf);
    let row_means: Vec<T> = table.values.iter().map(|r| r.iter().copied().sum::<T>() / cf).collect();
    let col_means: Vec<T> = (0..c)
        .map(|j| table.values.iter().map(|r| r[j]).sum::<T>() / sf)
        .collect();
    let ss_cond = sf * col_means.iter().map(|&m| (m - grand) * (m - grand)).sum::<T>();
    let mut ss_err = T::zero();
    for (i, row) in table.values.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            let e = x - row_means[i] - col_means[j] + grand;
            ss_err += e * e;
        }
    }
    let df1 = cf - T::one();
    let df2 = df1 * (sf - T::one());
    Ok(f_result(Method::RepeatedMeasuresAnova, ss_cond, ss_err, df1, df2))
}

/// Classical between/within one-way ANOVA on `(k - 1, N - k)` degrees of freedom.
pub fn one_way_anova<T: Real, G: AsRef<[T]>>(groups: &[G]) -> Result<TestResult<T>, StatsError> {
    if groups.len() < 2 || groups.iter().any(|g| g.as_ref().len() < 2) {
        return Err(StatsError::TooFewGroups);
    }
    for g in groups {
        check_finite(g.as_ref())?;
    }
    let n_total: usize = groups.iter().map(|g| g.as_ref().len()).sum();
    let grand = groups.iter().flat_map(|g| g.as_ref().iter().copied()).sum::<T>() / T::of_usize(n_total);
    let mut ss_between = T::zero();
    let mut ss_within = T::zero();
    for g in groups {
        let g = g.as_ref();
        let m = g.iter().copied().sum::<T>() / T::of_usize(g.len());
        ss_between += T::of_usize(g.len()) * (m - grand) * (m - grand);
        ss_within += g.iter().map(|&x| (x - m) * (x - m)).sum::<T>();
    }
    let df1 = T::of_usize(groups.len() - 1);
    let df2 = T::of_usize(n_total - groups.len());
    Ok(f_result(Method::OneWayAnova, ss_between, ss_within, df1, df2))
}
