//! Speech anonymization with the McAdams pole-angle transform, plus the
//! perceptual-study protocol and statistics used to evaluate it.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the double-precision types used by the CLI and service.

pub mod anonymizer;
pub mod metrics;
pub mod protocol;
pub mod scalar;
pub mod signal;
pub mod stats;

pub use scalar::Real;

pub type Waveform64 = signal::Waveform<f64>;
pub type McAdamsConfig64 = anonymizer::McAdamsConfig<f64>;
pub type PoleSet64 = anonymizer::PoleSet<f64>;
pub type LpcModel64 = anonymizer::LpcModel<f64>;
pub type TestResult64 = stats::TestResult<f64>;
pub type FdrOutcome64 = stats::FdrOutcome<f64>;
pub type Embedding64 = metrics::Embedding<f64>;
pub type ScoreSet64 = metrics::ScoreSet<f64>;
pub type LabeledScores64 = metrics::LabeledScores<f64>;
