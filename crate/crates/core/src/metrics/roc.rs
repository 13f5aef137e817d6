use super::{LabeledScores, MetricsError, ScoreSet};
use crate::scalar::Real;
use crate::stats::midranks;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eer<T> {
    /// Fraction in [0, 1].
    pub eer: T,
    pub threshold: T,
}

fn rates<T: Real>(scores: &ScoreSet<T>, t: T) -> (T, T) {
    let far = scores.impostor.iter().filter(|&&s| s >= t).count();
    let frr = scores.genuine.iter().filter(|&&s| s < t).count();
    (
        T::of_usize(far) / T::of_usize(scores.impostor.len()),
        T::of_usize(frr) / T::of_usize(scores.genuine.len()),
    )
}

/// Equal error rate, with FAR(t) = P(impostor >= t) and FRR(t) = P(genuine < t).
///
/// Thresholds are the distinct scores plus one sentinel above the maximum.
/// The crossing is linearly interpolated between the two bracketing thresholds.
pub fn compute_eer<T: Real>(scores: &ScoreSet<T>) -> Result<Eer<T>, MetricsError> {
    if scores.genuine.is_empty() || scores.impostor.is_empty() {
        return Err(MetricsError::EmptyScores);
    }
    let mut thresholds: Vec<T> = scores.genuine.iter().chain(&scores.impostor).copied().collect();
    if thresholds.iter().any(|s| !s.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    thresholds.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    thresholds.dedup();
    let top = thresholds[thresholds.len() - 1];
    thresholds.push(top + T::one().max(top.abs()));

    let (mut prev_t, (mut prev_far, mut prev_frr)) = (thresholds[0], rates(scores, thresholds[0]));
    if prev_far <= prev_frr {
        return Ok(Eer { eer: prev_far, threshold: prev_t });
    }
    for &t in &thresholds[1..] {
        let (far, frr) = rates(scores, t);
        if far <= frr {
            let d0 = prev_far - prev_frr;
            let d1 = far - frr;
            let lambda = d0 / (d0 - d1);
            return Ok(Eer {
                eer: prev_far + lambda * (far - prev_far),
                threshold: prev_t + lambda * (t - prev_t),
            });
        }
        prev_t = t;
        prev_far = far;
        prev_frr = frr;
    }
    unreachable!("the sentinel threshold has FAR = 0 and FRR = 1")
}

/// ROC AUC via the rank-sum identity, ties credited one half.
pub fn compute_auc<T: Real>(data: &LabeledScores<T>) -> Result<T, MetricsError> {
    if data.scores.len() != data.labels.len() {
        return Err(MetricsError::LengthMismatch { scores: data.scores.len(), labels: data.labels.len() });
    }
    if data.scores.iter().any(|s| !s.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    let n_pos = data.labels.iter().filter(|&&l| l).count();
    let n_neg = data.labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::DegenerateLabels);
    }
    let (ranks, _) = midranks(&data.scores);
    let r_pos: T = ranks.iter().zip(&data.labels).filter(|(_, &l)| l).map(|(&r, _)| r).sum();
    let u = r_pos - T::of_usize(n_pos * (n_pos + 1)) / T::lit(2.0);
    Ok(u / (T::of_usize(n_pos) * T::of_usize(n_neg)))
}
