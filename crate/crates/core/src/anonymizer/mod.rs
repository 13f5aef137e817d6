//! McAdams-coefficient speaker anonymization.
//!
//! Each frame is modelled by an all-pole LPC filter. The filter poles are
//! found as polynomial roots, every complex pole angle is raised to the power
//! `alpha`, and the frame is resynthesized from the warped filter and the
//! original prediction residual. Frames are recombined by overlap-add.

mod lpc;
mod poles;
mod roots;

pub use lpc::{
    autocorrelation, inverse_filter, levinson_durbin, lpc_analyze, lpc_analyze_weighted,
    resynthesize_frame, LpcModel, Synthesis, SILENCE_ENERGY, SYNTHESIS_CLIP, UNSTABLE_ENERGY_RATIO,
};
pub use poles::{
    find_poles, mcadams_transform, poles_to_coefficients, Pole, PoleSet, Reconstruction,
    CONJUGATE_RESIDUE_LIMIT,
};
pub use roots::{monic_roots, relative_residual, ROOT_TOLERANCE};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Real;
use crate::signal::{frame_signal, overlap_add, SignalError, Waveform, WindowKind};

pub const EXPECTED_SAMPLE_RATE: u32 = 16_000;

/// Failure inside one stage of the per-frame pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StageError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("root finding failed: {0}")]
    RootFindingFailure(String),
    #[error("reconstructed coefficients have imaginary residue {0:e}")]
    ConjugateAsymmetry(f64),
    #[error("unstable synthesis filter: output energy {output_energy:e} vs residual energy {residual_energy:e}")]
    UnstableFilter { output_energy: f64, residual_energy: f64 },
}

#[derive(Debug, Error)]
pub enum AnonymizeError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty waveform")]
    EmptyWaveform,
    #[error("frame {index}: {source}")]
    Frame {
        index: usize,
        #[source]
        source: StageError,
    },
    #[error(transparent)]
    Signal(#[from] SignalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McAdamsConfig<T> {
    pub alpha: T,
    pub lpc_order: usize,
    pub frame_length: usize,
    pub hop: usize,
    pub angle_clamp_epsilon: T,
}

impl<T: Real> Default for McAdamsConfig<T> {
    /// α = 0.8, order 20, 20 ms frames with a 10 ms hop at 16 kHz.
    fn default() -> Self {
        Self {
            alpha: T::lit(0.8),
            lpc_order: 20,
            frame_length: 320,
            hop: 160,
            angle_clamp_epsilon: T::lit(1e-3),
        }
    }
}

impl<T: Real> McAdamsConfig<T> {
    pub fn with_alpha(alpha: T) -> Self {
        Self { alpha, ..Self::default() }
    }

    /// 20 ms frames and 10 ms hop for the given rate.
    pub fn for_sample_rate(sample_rate: u32, alpha: T, lpc_order: usize) -> Self {
        let frame_length = (sample_rate as usize / 50).max(2);
        Self {
            alpha,
            lpc_order,
            frame_length,
            hop: frame_length / 2,
            angle_clamp_epsilon: T::lit(1e-3),
        }
    }

    pub fn validate(&self) -> Result<(), AnonymizeError> {
        let bad = |m: String| Err(AnonymizeError::InvalidConfig(m));
        if !(self.alpha > T::zero()) || !self.alpha.is_finite() {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if self.lpc_order < 2 {
            return bad(format!("lpc_order must be at least 2, got {}", self.lpc_order));
        }
        let eps = self.angle_clamp_epsilon;
        if !(eps > T::zero() && eps < T::lit(0.1)) {
            return bad(format!("angle_clamp_epsilon must lie in (0, 0.1), got {eps}"));
        }
        if self.frame_length <= self.lpc_order {
            return bad(format!(
                "frame_length {} must exceed lpc_order {}",
                self.frame_length, self.lpc_order
            ));
        }
        if self.hop == 0 || self.hop > self.frame_length / 2 {
            return bad(format!(
                "hop {} must lie in 1..={} for Hann overlap-add",
                self.hop,
                self.frame_length / 2
            ));
        }
        Ok(())
    }
}

/// Per-frame outcome, kept for the batch manifest.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameStats {
    pub frames: usize,
    pub clipped_frames: usize,
    pub degenerate_frames: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Anonymized<T> {
    pub waveform: Waveform<T>,
    pub stats: FrameStats,
}

/// Runs the full pole-warping pipeline on one frame. Returns the new frame
/// and whether the output guard clipped it.
pub fn anonymize_frame<T: Real>(
    frame: &[T],
    analysis_window: &[T],
    config: &McAdamsConfig<T>,
) -> Result<(Vec<T>, bool, bool), StageError> {
    let model = lpc_analyze_weighted(frame, config.lpc_order, analysis_window)?;
    if model.degenerate {
        return Ok((frame.to_vec(), false, true));
    }
    let poles = find_poles(&model.coefficients)?;
    let warped = mcadams_transform(&poles, config.alpha, config.angle_clamp_epsilon);
    let rec = poles_to_coefficients(&warped)?;
    let out = resynthesize_frame(&rec.coefficients, &model.residual)?;
    Ok((out.samples, out.clipped, false))
}

/// Anonymizes a waveform. The output has the input's length and sample rate.
pub fn anonymize<T: Real>(
    waveform: &Waveform<T>,
    config: &McAdamsConfig<T>,
) -> Result<Anonymized<T>, AnonymizeError> {
    config.validate()?;
    if waveform.is_empty() {
        return Err(AnonymizeError::EmptyWaveform);
    }
    if waveform.sample_rate() != EXPECTED_SAMPLE_RATE {
        log::warn!(
            "anonymizing {} Hz audio; parameters are tuned for {} Hz",
            waveform.sample_rate(),
            EXPECTED_SAMPLE_RATE
        );
    }

    // Pad both ends so every input sample is covered by a full window envelope.
    let pad = config.frame_length - config.hop;
    let mut padded = vec![T::zero(); pad];
    padded.extend_from_slice(waveform.samples());
    padded.extend(std::iter::repeat(T::zero()).take(pad));
    let padded = Waveform::new(padded, waveform.sample_rate())?;

    let frames = frame_signal(&padded, config.frame_length, config.hop, WindowKind::Hann)?;
    let window = WindowKind::Hann.weights::<T>(config.frame_length);
    let processed: Vec<(Vec<T>, bool, bool)> = frames
        .frames
        .par_iter()
        .enumerate()
        .map(|(index, frame)| {
            anonymize_frame(frame, &window, config).map_err(|source| AnonymizeError::Frame { index, source })
        })
        .collect::<Result<_, _>>()?;

    let stats = FrameStats {
        frames: processed.len(),
        clipped_frames: processed.iter().filter(|p| p.1).count(),
        degenerate_frames: processed.iter().filter(|p| p.2).count(),
    };
    let rebuilt = overlap_add(&frames.with_frames(processed.into_iter().map(|p| p.0).collect()))?;
    let samples = rebuilt.samples()[pad..pad + waveform.len()].to_vec();
    Ok(Anonymized {
        waveform: Waveform::new(samples, waveform.sample_rate())?,
        stats,
    })
}
