//! Log-mel statistics embedder. Not a speaker model: it exists so the scoring
//! pipeline can be exercised end to end without pretrained networks.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{Embedding, MetricsError};
use crate::scalar::Real;
use crate::signal::{Waveform, WindowKind};

pub const MEL_BANDS: usize = 40;
pub const EMBEDDING_DIM: usize = 2 * MEL_BANDS;

const LOG_FLOOR: f64 = 1e-10;

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular filters on the HTK mel scale spanning 0 Hz to Nyquist.
fn mel_filterbank(n_fft: usize, sample_rate: f64) -> Vec<Vec<f64>> {
    let bins = n_fft / 2 + 1;
    let top = hz_to_mel(sample_rate / 2.0);
    let edges: Vec<f64> = (0..MEL_BANDS + 2)
        .map(|i| mel_to_hz(top * i as f64 / (MEL_BANDS + 1) as f64))
        .collect();
    let bin_hz = sample_rate / n_fft as f64;
    (0..MEL_BANDS)
        .map(|b| {
            let (lo, mid, hi) = (edges[b], edges[b + 1], edges[b + 2]);
            (0..bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    if f <= lo || f >= hi {
                        0.0
                    } else if f <= mid {
                        (f - lo) / (mid - lo)
                    } else {
                        (hi - f) / (hi - mid)
                    }
                })
                .collect()
        })
        .collect()
}

/// 25 ms Hann frames every 10 ms, 40 log-mel bands; per-band mean and
/// standard deviation concatenated, then the vector mean subtracted.
pub fn reference_embed<T: Real>(waveform: &Waveform<T>) -> Result<Embedding<T>, MetricsError> {
    let sr = f64::from(waveform.sample_rate());
    let frame_len = (sr * 0.025).round() as usize;
    let hop = (sr * 0.010).round() as usize;
    let n = waveform.len();
    let frames = if n < frame_len { 0 } else { (n - frame_len) / hop + 1 };
    if frames < 3 {
        return Err(MetricsError::AudioTooShort { frames });
    }
    let n_fft = frame_len.next_power_of_two().max(512);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);
    let window: Vec<f64> = WindowKind::Hann.weights(frame_len);
    let bank = mel_filterbank(n_fft, sr);
    let samples: Vec<f64> = waveform.samples().iter().map(|s| s.as_f64()).collect();

    let mut logmel = vec![Vec::with_capacity(frames); MEL_BANDS];
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    for f in 0..frames {
        let start = f * hop;
        for (i, slot) in buf.iter_mut().enumerate() {
            let v = if i < frame_len { samples[start + i] * window[i] } else { 0.0 };
            *slot = Complex::new(v, 0.0);
        }
        fft.process(&mut buf);
        let power: Vec<f64> = buf[..n_fft / 2 + 1].iter().map(|c| c.norm_sqr()).collect();
        for (band, filt) in bank.iter().enumerate() {
            let e: f64 = filt.iter().zip(&power).map(|(w, p)| w * p).sum();
            logmel[band].push((e + LOG_FLOOR).ln());
        }
    }

    let mut vector = Vec::with_capacity(EMBEDDING_DIM);
    let mut sds = Vec::with_capacity(MEL_BANDS);
    for band in &logmel {
        let mean = band.iter().sum::<f64>() / frames as f64;
        let var = band.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (frames - 1) as f64;
        vector.push(mean);
        sds.push(var.sqrt());
    }
    vector.extend(sds);
    let centre = vector.iter().sum::<f64>() / EMBEDDING_DIM as f64;
    let vector = vector.into_iter().map(|v| T::lit(v - centre)).collect();
    Embedding::new(format!("{n}@{sr}"), vector)
}
