//! Benjamini–Hochberg step-up procedure.

use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdrOutcome<T> {
    /// Input p-values in their original order.
    pub raw_p: Vec<T>,
    pub significant: Vec<bool>,
    /// `min_{j >= i} (m / j) p_(j)` capped at 1, in original order.
    pub adjusted: Vec<T>,
    /// Largest k with `p_(k) <= k alpha / m`; 0 when nothing is rejected.
    pub cutoff_rank: usize,
    pub alpha: T,
}

impl<T: Real> FdrOutcome<T> {
    pub fn rejected(&self) -> usize {
        self.significant.iter().filter(|&&s| s).count()
    }
}

pub fn bh_fdr<T: Real>(p_values: &[T], alpha: T) -> Result<FdrOutcome<T>, StatsError> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(StatsError::InvalidAlpha(alpha.as_f64()));
    }
    if let Some(&bad) = p_values.iter().find(|p| !(**p >= T::zero() && **p <= T::one())) {
        return Err(StatsError::InvalidP(bad.as_f64()));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].partial_cmp(&p_values[b]).expect("validated p"));

    let m_t = T::of_usize(m);
    let mut cutoff_rank = 0;
    for (rank0, &i) in order.iter().enumerate() {
        let k = rank0 + 1;
        if p_values[i] <= T::of_usize(k) * alpha / m_t {
            cutoff_rank = k;
        }
    }
    let significant = match cutoff_rank {
        0 => vec![false; m],
        k => {
            let p_k = p_values[order[k - 1]];
            p_values.iter().map(|&p| p <= p_k).collect()
        }
    };

    let mut adjusted = vec![T::zero(); m];
    let mut running = T::one();
    for (rank0, &i) in order.iter().enumerate().rev() {
        let scaled = m_t / T::of_usize(rank0 + 1) * p_values[i];
        running = running.min(scaled);
        adjusted[i] = running;
    }

    Ok(FdrOutcome { raw_p: p_values.to_vec(), significant, adjusted, cutoff_rank, alpha })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_all_significant() {
        let r = bh_fdr(&[0.01f64, 0.02, 0.03, 0.04, 0.05], 0.05).unwrap();
        assert_eq!(r.cutoff_rank, 5);
        assert!(r.significant.iter().all(|&s| s));
        for a in &r.adjusted {
            assert!((a - 0.05).abs() < 1e-15);
        }
    }

    #[test]
    fn nothing_significant() {
        let r = bh_fdr(&[0.9f64, 0.95], 0.05).unwrap();
        assert_eq!(r.cutoff_rank, 0);
        assert_eq!(r.significant, vec![false, false]);
        assert_eq!(r.adjusted, vec![0.95, 0.95]);
    }

    #[test]
    fn step_up_rescues_smaller_ranks() {
        // sorted: 0.02, 0.03, 0.035, 0.5; rank 3 passes at 0.0375
        let r = bh_fdr(&[0.5f64, 0.03, 0.02, 0.035], 0.05).unwrap();
        assert_eq!(r.cutoff_rank, 3);
        assert_eq!(r.significant, vec![false, true, true, true]);
        assert!((r.adjusted[2] - 0.04666666666666667).abs() < 1e-15);
        assert_eq!(r.adjusted[0], 0.5);
    }

    #[test]
    fn ties_share_fate() {
        let r = bh_fdr(&[0.04f64, 0.04, 0.04], 0.05).unwrap();
        assert_eq!(r.significant, vec![true, true, true]);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(bh_fdr(&[1.2f64], 0.05).unwrap_err(), StatsError::InvalidP(1.2));
        assert_eq!(bh_fdr(&[f64::NAN], 0.05).unwrap_err().to_string(), "p-value NaN outside [0, 1]");
        assert_eq!(bh_fdr(&[0.1f64], 1.0).unwrap_err(), StatsError::InvalidAlpha(1.0));
        assert_eq!(bh_fdr::<f64>(&[], 0.05).unwrap().cutoff_rank, 0);
    }
}
