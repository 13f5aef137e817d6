use super::StatsError;
use crate::scalar::{self, Real};

pub fn mean<T: Real>(xs: &[T]) -> Result<T, StatsError> {
    if xs.is_empty() {
        return Err(StatsError::EmptySample);
    }
    Ok(scalar::mean(xs))
}

/// Sample standard deviation with the n - 1 denominator.
pub fn sample_sd<T: Real>(xs: &[T]) -> Result<T, StatsError> {
    if xs.len() < 2 {
        return Err(StatsError::TooFewObservations { needed: 2, got: xs.len() });
    }
    Ok(scalar::sample_variance(xs).sqrt())
}

pub fn mean_sd<T: Real>(xs: &[T]) -> Result<(T, T), StatsError> {
    Ok((mean(xs)?, sample_sd(xs)?))
}
