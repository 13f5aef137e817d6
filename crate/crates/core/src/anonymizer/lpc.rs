//! Autocorrelation-method linear prediction.
//!
//! Coefficients follow the predictor convention `x[n] ≈ Σ a_k x[n-k] + e[n]`,
//! so the inverse filter is `A(z) = 1 - Σ a_k z^-k`.

use serde::{Deserialize, Serialize};

use super::StageError;
use crate::scalar::Real;

/// Frames whose mean-square energy falls below this are treated as silence.
pub const SILENCE_ENERGY: f64 = 1e-12;

/// Output magnitude bound applied after resynthesis.
pub const SYNTHESIS_CLIP: f64 = 4.0;

/// Output-to-residual energy ratio above which a synthesis filter is declared unstable.
pub const UNSTABLE_ENERGY_RATIO: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpcModel<T> {
    pub coefficients: Vec<T>,
    pub residual: Vec<T>,
    /// RMS of the residual.
    pub gain: T,
    /// Near-silent frame: coefficients and residual are all zero.
    pub degenerate: bool,
}

impl<T: Real> LpcModel<T> {
    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    fn zero(order: usize, len: usize) -> Self {
        Self {
            coefficients: vec![T::zero(); order],
            residual: vec![T::zero(); len],
            gain: T::zero(),
            degenerate: true,
        }
    }
}

pub fn autocorrelation<T: Real>(x: &[T], max_lag: usize) -> Vec<T> {
    (0..=max_lag)
        .map(|lag| x.iter().zip(&x[lag.min(x.len())..]).map(|(&a, &b)| a * b).sum())
        .collect()
}

/// Levinson–Durbin recursion. Returns predictor coefficients and the final
/// prediction error power. Every reflection coefficient of a positive-definite
/// autocorrelation sequence has magnitude below one, which makes `1/A(z)` minimum phase.
pub fn levinson_durbin<T: Real>(r: &[T], order: usize) -> Result<(Vec<T>, T), StageError> {
    let mut a = vec![T::zero(); order];
    let mut err = r[0];
    let mut prev = vec![T::zero(); order];
    for i in 0..order {
        let mut acc = r[i + 1];
        for j in 0..i {
            acc -= a[j] * r[i - j];
        }
        let k = acc / err;
        if !k.is_finite() || k.abs() >= T::one() {
            return Err(StageError::NumericalFailure(format!(
                "reflection coefficient {} at stage {}",
                k.as_f64(),
                i + 1
            )));
        }
        prev[..i].copy_from_slice(&a[..i]);
        a[i] = k;
        for j in 0..i {
            a[j] = prev[j] - k * prev[i - 1 - j];
        }
        err *= T::one() - k * k;
    }
    Ok((a, err))
}

/// Residual `e[n] = x[n] - Σ a_k x[n-k]` with zero initial state.
pub fn inverse_filter<T: Real>(frame: &[T], coefficients: &[T]) -> Vec<T> {
    (0..frame.len())
        .map(|n| {
            let pred: T = coefficients
                .iter()
                .enumerate()
                .take(n)
                .map(|(k, &a)| a * frame[n - k - 1])
                .sum();
            frame[n] - pred
        })
        .collect()
}

/// LPC analysis of one frame; coefficients and residual both come from `frame` as given.
pub fn lpc_analyze<T: Real>(frame: &[T], order: usize) -> Result<LpcModel<T>, StageError> {
    analyze(frame, frame, order)
}

/// Estimates coefficients on `frame · weights` and inverse-filters the
/// unweighted frame, so resynthesis with the same coefficients returns `frame`.
pub fn lpc_analyze_weighted<T: Real>(
    frame: &[T],
    order: usize,
    weights: &[T],
) -> Result<LpcModel<T>, StageError> {
    if weights.len() != frame.len() {
        return Err(StageError::InvalidInput(format!(
            "{} weights for a frame of {}",
            weights.len(),
            frame.len()
        )));
    }
    let weighted: Vec<T> = frame.iter().zip(weights).map(|(&x, &w)| x * w).collect();
    analyze(frame, &weighted, order)
}

fn analyze<T: Real>(frame: &[T], estimation: &[T], order: usize) -> Result<LpcModel<T>, StageError> {
    if order < 2 || frame.len() <= order {
        return Err(StageError::InvalidInput(format!(
            "order {order} needs order >= 2 and a frame longer than the order (got {})",
            frame.len()
        )));
    }
    if frame.iter().chain(estimation).any(|s| !s.is_finite()) {
        return Err(StageError::NumericalFailure("non-finite sample".into()));
    }
    let n = T::of_usize(frame.len());
    let frame_energy: T = frame.iter().map(|&s| s * s).sum();
    let mut r = autocorrelation(estimation, order);
    let floor = T::lit(SILENCE_ENERGY);
    if frame_energy / n < floor || r[0] / n < floor {
        return Ok(LpcModel::zero(order, frame.len()));
    }
    // White-noise correction keeps the Toeplitz system strictly positive definite.
    r[0] *= T::one() + T::epsilon().max(T::lit(1e-9)) * T::lit(16.0);

    let (coefficients, _) = levinson_durbin(&r, order)?;
    let residual = inverse_filter(frame, &coefficients);
    let res_energy: T = residual.iter().map(|&e| e * e).sum();
    if !res_energy.is_finite() {
        return Err(StageError::NumericalFailure("residual energy overflow".into()));
    }
    Ok(LpcModel {
        coefficients,
        residual,
        gain: (res_energy / n).sqrt(),
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthesis<T> {
    pub samples: Vec<T>,
    /// True when any output sample exceeded the ±4 guard and was clipped.
    pub clipped: bool,
}

/// All-pole resynthesis `x̃[n] = Σ ã_k x̃[n-k] + e[n]` from zero state.
pub fn resynthesize_frame<T: Real>(coefficients: &[T], residual: &[T]) -> Result<Synthesis<T>, StageError> {
    if residual.iter().chain(coefficients).any(|s| !s.is_finite()) {
        return Err(StageError::NumericalFailure("non-finite synthesis input".into()));
    }
    let mut y = vec![T::zero(); residual.len()];
    for n in 0..residual.len() {
        let mut acc = residual[n];
        for (k, &a) in coefficients.iter().enumerate().take(n) {
            acc += a * y[n - k - 1];
        }
        y[n] = acc;
    }
    let out_energy: T = y.iter().map(|&s| s * s).sum();
    let res_energy: T = residual.iter().map(|&s| s * s).sum();
    if !out_energy.is_finite() || out_energy > T::lit(UNSTABLE_ENERGY_RATIO) * res_energy {
        return Err(StageError::UnstableFilter {
            output_energy: out_energy.as_f64(),
            residual_energy: res_energy.as_f64(),
        });
    }
    let bound = T::lit(SYNTHESIS_CLIP);
    let mut clipped = false;
    for s in &mut y {
        if s.abs() > bound {
            *s = s.signum() * bound;
            clipped = true;
        }
    }
    Ok(Synthesis { samples: y, clipped })
}
