//! Deterministic speech-like test signals: an excitation driven through a
//! cascade of two-pole resonators.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{SignalError, Waveform};
use crate::scalar::Real;

/// Excitation fed to the resonators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Excitation {
    /// Uniform white noise in [-1, 1) from a seeded ChaCha8 stream.
    Noise { seed: u64 },
    /// Unit impulses every `sample_rate / f0` samples.
    Pulses { f0: f64 },
}

/// Pole radius and angle of a resonance at `freq_hz` with 3 dB `bandwidth_hz`.
pub fn formant_pole(freq_hz: f64, bandwidth_hz: f64, sample_rate: u32) -> (f64, f64) {
    let fs = f64::from(sample_rate);
    ((-std::f64::consts::PI * bandwidth_hz / fs).exp(), 2.0 * std::f64::consts::PI * freq_hz / fs)
}

/// Filters `excitation` through `1 / prod_k (1 - 2 r_k cos(phi_k) z^-1 + r_k^2 z^-2)`
/// and scales the result to a peak of `peak`.
pub fn resonator_signal<T: Real>(
    poles: &[(f64, f64)],
    excitation: Excitation,
    len: usize,
    sample_rate: u32,
    peak: f64,
) -> Result<Waveform<T>, SignalError> {
    let mut x: Vec<f64> = match excitation {
        Excitation::Noise { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..len).map(|_| (rng.next_u64() >> 11) as f64 / (1u64 << 52) as f64 - 1.0).collect()
        }
        Excitation::Pulses { f0 } => {
            let period = f64::from(sample_rate) / f0;
            let mut next = 0.0;
            (0..len)
                .map(|n| {
                    if n as f64 >= next {
                        next += period;
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        }
    };
    for &(r, phi) in poles {
        let (a1, a2) = (2.0 * r * phi.cos(), -r * r);
        let (mut y1, mut y2) = (0.0, 0.0);
        for s in x.iter_mut() {
            let y = *s + a1 * y1 + a2 * y2;
            y2 = y1;
            y1 = y;
            *s = y;
        }
    }
    let max = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if max > 0.0 { peak / max } else { 0.0 };
    Waveform::new(x.into_iter().map(|v| T::lit(v * scale)).collect(), sample_rate)
}
