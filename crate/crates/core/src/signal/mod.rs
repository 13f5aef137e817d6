//! Waveform I/O, framing and overlap-add resynthesis.

mod frame;
pub mod synth;
mod wav;

pub use frame::{frame_count, frame_signal, overlap_add, FrameSequence, WindowKind};
pub use wav::{load_audio, save_audio, Waveform};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("audio file not found: {0}")]
    MissingFile(String),
    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),
    #[error("audio contains no samples")]
    EmptyAudio,
    #[error("invalid waveform: {0}")]
    InvalidWaveform(String),
    #[error("invalid framing: frame_length={frame_length}, hop={hop}")]
    InvalidFraming { frame_length: usize, hop: usize },
    #[error("i/o failure: {0}")]
    IoFailure(String),
}
