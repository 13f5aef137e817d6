use std::collections::BTreeSet;
use std::fmt::Debug;

use super::StatsError;
use crate::scalar::Real;

/// Percentage of correct identifications.
pub fn accuracy<T: Real>(correct: u64, total: u64) -> Result<T, StatsError> {
    if total == 0 {
        return Err(StatsError::EmptyTrials);
    }
    if correct > total {
        return Err(StatsError::InvalidCount { correct, total });
    }
    Ok(T::lit(100.0) * T::lit(correct as f64) / T::lit(total as f64))
}

/// Likert ratings (1–5) as a percentage of the maximum attainable total.
pub fn normalized_quality_score<T: Real>(ratings: &[u8]) -> Result<T, StatsError> {
    if ratings.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if let Some(&bad) = ratings.iter().find(|r| !(1..=5).contains(*r)) {
        return Err(StatsError::OutOfRangeRating(bad));
    }
    let total: u64 = ratings.iter().map(|&r| u64::from(r)).sum();
    Ok(T::lit(100.0) * T::lit(total as f64) / T::lit((ratings.len() * 5) as f64))
}

/// Per-unit `original - anonymized`, in the order of `original`. Both inputs
/// must cover exactly the same keys.
pub fn degradation_scores<K, T>(original: &[(K, T)], anonymized: &[(K, T)]) -> Result<Vec<(K, T)>, StatsError>
where
    K: Ord + Clone + Debug,
    T: Real,
{
    let keys_o: BTreeSet<&K> = original.iter().map(|(k, _)| k).collect();
    let keys_a: BTreeSet<&K> = anonymized.iter().map(|(k, _)| k).collect();
    if keys_o.len() != original.len() || keys_a.len() != anonymized.len() {
        return Err(StatsError::KeyMismatch("duplicate key".into()));
    }
    if keys_o != keys_a {
        let missing: Vec<_> = keys_o.symmetric_difference(&keys_a).collect();
        return Err(StatsError::KeyMismatch(format!("{missing:?}")));
    }
    Ok(original
        .iter()
        .map(|(k, o)| {
            let a = anonymized.iter().find(|(ka, _)| ka == k).map(|p| p.1).unwrap_or_else(T::zero);
            (k.clone(), *o - a)
        })
        .collect())
}
