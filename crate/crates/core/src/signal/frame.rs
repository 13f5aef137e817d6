use serde::{Deserialize, Serialize};

use super::{SignalError, Waveform};
use crate::scalar::Real;

const ENVELOPE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Rectangular,
    /// Periodic Hann, `0.5 - 0.5 cos(2πn/L)`; sums to a constant at hop `L/2`.
    Hann,
}

impl WindowKind {
    pub fn weights<T: Real>(self, len: usize) -> Vec<T> {
        match self {
            WindowKind::Rectangular => vec![T::one(); len],
            WindowKind::Hann => {
                let half = T::lit(0.5);
                let step = T::TAU() / T::of_usize(len);
                (0..len)
                    .map(|n| half - half * (step * T::of_usize(n)).cos())
                    .collect()
            }
        }
    }
}

/// Raw (unweighted) short-time frames of a waveform. The window is applied at
/// resynthesis time by [`overlap_add`].
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence<T> {
    pub frames: Vec<Vec<T>>,
    pub frame_length: usize,
    pub hop: usize,
    pub window: WindowKind,
    /// Length of the framed signal, used to trim the zero-padded tail.
    pub signal_len: usize,
    pub sample_rate: u32,
}

impl<T: Real> FrameSequence<T> {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn offset(&self, index: usize) -> usize {
        index * self.hop
    }

    /// Same geometry, new frame contents.
    pub fn with_frames(&self, frames: Vec<Vec<T>>) -> Self {
        Self { frames, ..self.clone() }
    }
}

/// Number of frames produced for `n` samples: frames start at multiples of
/// `hop` and a nonempty tail is zero-padded into one final frame.
pub fn frame_count(n: usize, frame_length: usize, hop: usize) -> usize {
    match n {
        0 => 0,
        n if n <= frame_length => 1,
        n => 1 + (n - frame_length).div_ceil(hop),
    }
}

fn check_geometry(frame_length: usize, hop: usize) -> Result<(), SignalError> {
    if frame_length < 2 || hop == 0 || hop > frame_length {
        return Err(SignalError::InvalidFraming { frame_length, hop });
    }
    Ok(())
}

pub fn frame_signal<T: Real>(
    waveform: &Waveform<T>,
    frame_length: usize,
    hop: usize,
    window: WindowKind,
) -> Result<FrameSequence<T>, SignalError> {
    check_geometry(frame_length, hop)?;
    let x = waveform.samples();
    let frames = (0..frame_count(x.len(), frame_length, hop))
        .map(|i| {
            let start = i * hop;
            let end = (start + frame_length).min(x.len());
            let mut f = x[start..end].to_vec();
            f.resize(frame_length, T::zero());
            f
        })
        .collect();
    Ok(FrameSequence {
        frames,
        frame_length,
        hop,
        window,
        signal_len: x.len(),
        sample_rate: waveform.sample_rate(),
    })
}

/// Weights each frame by the synthesis window, sums at the frame offsets and
/// divides out the summed window envelope wherever it exceeds 1e-6.
pub fn overlap_add<T: Real>(frames: &FrameSequence<T>) -> Result<Waveform<T>, SignalError> {
    let (len, hop) = (frames.frame_length, frames.hop);
    check_geometry(len, hop)?;
    let valid = match frames.window {
        WindowKind::Hann => hop <= len / 2,
        WindowKind::Rectangular => hop == len,
    };
    if !valid {
        return Err(SignalError::InvalidFraming { frame_length: len, hop });
    }
    if let Some(bad) = frames.frames.iter().position(|f| f.len() != len) {
        return Err(SignalError::InvalidWaveform(format!(
            "frame {bad} has length {} instead of {len}",
            frames.frames[bad].len()
        )));
    }

    let total = frames.frames.len().saturating_sub(1) * hop + len;
    let mut acc = vec![T::zero(); total];
    let mut envelope = vec![T::zero(); total];
    let w = frames.window.weights::<T>(len);
    for (i, frame) in frames.frames.iter().enumerate() {
        let off = i * hop;
        for (k, (&s, &wk)) in frame.iter().zip(&w).enumerate() {
            acc[off + k] += wk * s;
            envelope[off + k] += wk;
        }
    }
    let floor = T::lit(ENVELOPE_FLOOR);
    let mut out: Vec<T> = acc
        .into_iter()
        .zip(envelope)
        .map(|(a, e)| if e > floor { a / e } else { a })
        .collect();
    out.truncate(if frames.frames.is_empty() { 0 } else { frames.signal_len });
    Waveform::new(out, frames.sample_rate)
}
