use std::io::{Cursor, Read, Seek};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SignalError;
use crate::scalar::Real;

const I16_SCALE: f64 = 32768.0;

/// Mono PCM audio with amplitudes nominally in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform<T> {
    samples: Vec<T>,
    sample_rate: u32,
}

impl<T: Real> Waveform<T> {
    pub fn new(samples: Vec<T>, sample_rate: u32) -> Result<Self, SignalError> {
        if sample_rate == 0 {
            return Err(SignalError::InvalidWaveform("sample rate must be positive".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(SignalError::InvalidWaveform(format!("non-finite sample at index {i}")));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn silence(len: usize, sample_rate: u32) -> Result<Self, SignalError> {
        Self::new(vec![T::zero(); len], sample_rate)
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channel_count(&self) -> u16 {
        1
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    /// Root-mean-square amplitude; zero for an empty waveform.
    pub fn rms(&self) -> T {
        if self.samples.is_empty() {
            return T::zero();
        }
        let ss: T = self.samples.iter().map(|&s| s * s).sum();
        (ss / T::of_usize(self.samples.len())).sqrt()
    }

    /// Decodes a RIFF/WAVE byte stream (16-bit signed PCM, mono or stereo).
    pub fn from_wav_reader<R: Read>(reader: R) -> Result<Self, SignalError> {
        let mut reader = hound::WavReader::new(reader)
            .map_err(|e| SignalError::UnsupportedFormat(e.to_string()))?;
        let spec = reader.spec();
        if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
            return Err(SignalError::UnsupportedFormat(format!(
                "expected 16-bit integer PCM, found {}-bit {:?}",
                spec.bits_per_sample, spec.sample_format
            )));
        }
        let channels = usize::from(spec.channels);
        if channels == 0 || channels > 2 {
            return Err(SignalError::UnsupportedFormat(format!("{channels} channels")));
        }
        let raw = reader
            .samples::<i16>()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| SignalError::UnsupportedFormat(e.to_string()))?;
        if raw.is_empty() {
            return Err(SignalError::EmptyAudio);
        }
        let scale = T::lit(I16_SCALE);
        let samples: Vec<T> = raw
            .chunks(channels)
            .map(|frame| {
                let sum: T = frame.iter().map(|&s| T::lit(f64::from(s))).sum();
                sum / T::of_usize(frame.len()) / scale
            })
            .collect();
        Self::new(samples, spec.sample_rate)
    }

    /// Encodes as 16-bit mono PCM. Samples are clipped to `[-1, 1]`, scaled by
    /// 32768 and saturated to the `i16` range, so a load after a save differs
    /// from the clipped input by at most one quantization step.
    pub fn write_wav<W: std::io::Write + Seek>(&self, writer: W) -> Result<(), SignalError> {
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: self.sample_rate,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let io = |e: hound::Error| SignalError::IoFailure(e.to_string());
        let mut w = hound::WavWriter::new(writer, spec).map_err(io)?;
        for &s in &self.samples {
            w.write_sample(quantize(s)).map_err(io)?;
        }
        w.finalize().map_err(io)
    }

    pub fn to_wav_bytes(&self) -> Result<Vec<u8>, SignalError> {
        let mut cursor = Cursor::new(Vec::new());
        self.write_wav(&mut cursor)?;
        Ok(cursor.into_inner())
    }
}

fn quantize<T: Real>(s: T) -> i16 {
    let clipped = s.as_f64().clamp(-1.0, 1.0);
    (clipped * I16_SCALE).round().clamp(-32768.0, 32767.0) as i16
}

pub fn load_audio<T: Real>(path: impl AsRef<Path>) -> Result<Waveform<T>, SignalError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => SignalError::MissingFile(path.display().to_string()),
        _ => SignalError::IoFailure(format!("{}: {e}", path.display())),
    })?;
    Waveform::from_wav_reader(std::io::BufReader::new(file))
}

pub fn save_audio<T: Real>(waveform: &Waveform<T>, path: impl AsRef<Path>) -> Result<(), SignalError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path)
        .map_err(|e| SignalError::IoFailure(format!("{}: {e}", path.display())))?;
    waveform.write_wav(std::io::BufWriter::new(file))
}
