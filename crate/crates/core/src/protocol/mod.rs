//! Blinded listening-study protocol: per-listener randomized plans, the
//! zero-shot / few-shot / quality session state machine, scoring and CSV
//! export in the shape the statistics expect.

mod config;
mod export;
mod rng;
mod scoring;
mod session;
pub mod view;

pub use config::{Expertise, Gender, ListenerProfile, Proficiency, StimulusPair, StudyConfig, RNG_ALGORITHM};
pub use export::{
    export_responses, read_table3, read_table5, write_table3, write_table5, Table3Row, Table5Row,
};
pub use rng::{phase_rng, uniform_below, StudyRng};
pub use scoring::{score_discrimination, score_quality, AccuracyCell, QualityCell};
pub use session::{
    generate_session, Current, Phase, QualityItem, ResponseKind, ResponseRecord, SessionEvent, SessionPlan,
    SessionState, TrialPair,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("study has no stimulus pairs")]
    EmptyStudy,
    #[error("stimulus id {0:?} appears more than once")]
    DuplicateStimulus(String),
    #[error("group {0:?} is not in the configured group list")]
    UnknownGroup(String),
    #[error("group {0:?} is listed twice")]
    DuplicateGroup(String),
    #[error("likert scale must have 5 levels, got {0}")]
    InvalidLikertLevels(u8),
    #[error("unsupported randomization algorithm {0:?}")]
    UnsupportedRng(String),
    #[error("slot {slot} of {condition} trial {trial} was already played")]
    ReplayForbidden { condition: Condition, trial: usize, slot: Slot },
    #[error("event not allowed now: {0}")]
    OutOfPhaseEvent(String),
    #[error("a response for {0} was already recorded")]
    DuplicateResponse(String),
    #[error("rating {0} outside 1..=5")]
    InvalidRating(u8),
    #[error("response does not match any trial: {0}")]
    OrphanResponse(String),
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Listening condition of the discrimination task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// Each slot may be played once.
    ZeroShot,
    /// Unlimited replay.
    FewShot,
}

impl Condition {
    pub const ALL: [Condition; 2] = [Condition::ZeroShot, Condition::FewShot];

    /// Label used in the accuracy CSV schema.
    pub fn csv_label(self) -> &'static str {
        match self {
            Condition::ZeroShot => "zero",
            Condition::FewShot => "few",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::ZeroShot => "zero_shot",
            Condition::FewShot => "few_shot",
        })
    }
}

impl FromStr for Condition {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero" | "zero_shot" => Ok(Condition::ZeroShot),
            "few" | "few_shot" => Ok(Condition::FewShot),
            other => Err(ProtocolError::Format(format!("unknown condition {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Slot {
    A,
    B,
}

impl Slot {
    pub fn index(self) -> usize {
        match self {
            Slot::A => 0,
            Slot::B => 1,
        }
    }

    pub fn other(self) -> Slot {
        match self {
            Slot::A => Slot::B,
            Slot::B => Slot::A,
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Slot::A => "A",
            Slot::B => "B",
        })
    }
}

/// Whether a quality stimulus is the original recording or its anonymized version.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Orig,
    Anon,
}

impl Variant {
    pub fn csv_label(self) -> &'static str {
        match self {
            Variant::Orig => "orig",
            Variant::Anon => "anon",
        }
    }
}

impl FromStr for Variant {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "orig" => Ok(Variant::Orig),
            "anon" => Ok(Variant::Anon),
            other => Err(ProtocolError::Format(format!("unknown variant {other:?}"))),
        }
    }
}
