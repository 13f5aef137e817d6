//! Payloads sent to listener clients. These types are the only session data
//! that leaves the server; none of them may name a group, the original slot,
//! a stimulus id or a file.

use serde::{Deserialize, Serialize};

use super::session::{Current, SessionState};
use super::{Condition, Slot};

/// Field names that must never appear in an outbound payload.
pub const FORBIDDEN_FIELDS: &[&str] = &[
    "group",
    "group_label",
    "hidden_truth",
    "original_slot",
    "original",
    "orig",
    "anon",
    "anonymized",
    "variant",
    "stimulus",
    "pair_index",
    "speaker",
    "gender",
    "filename",
    "file",
    "path",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotView {
    pub token: String,
    pub play_count: u32,
    /// `None` when replay is unlimited.
    pub plays_remaining: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscriminationView {
    pub condition: Condition,
    pub trial: usize,
    pub total: usize,
    pub a: SlotView,
    pub b: SlotView,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingView {
    pub item: usize,
    pub total: usize,
    pub token: String,
    pub scale_min: u8,
    pub scale_max: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum CurrentView {
    ZeroShot(DiscriminationView),
    FewShot(DiscriminationView),
    Quality(RatingView),
    Complete,
}

impl CurrentView {
    /// Blinded view of the session's current step; `token` maps a stimulus id
    /// to the opaque token minted for it.
    pub fn of(state: &SessionState, mut token: impl FnMut(&str) -> String) -> Self {
        match state.current() {
            Current::Discrimination { trial, play_counts } => {
                let limit = (trial.condition == Condition::ZeroShot).then_some(1u32);
                let mut slot = |s: Slot| SlotView {
                    token: token(trial.stimulus(s)),
                    play_count: play_counts[s.index()],
                    plays_remaining: limit.map(|l| l.saturating_sub(play_counts[s.index()])),
                };
                let view = DiscriminationView {
                    condition: trial.condition,
                    trial: trial.trial_index,
                    total: state.plan().trials(trial.condition).len(),
                    a: slot(Slot::A),
                    b: slot(Slot::B),
                };
                match trial.condition {
                    Condition::ZeroShot => CurrentView::ZeroShot(view),
                    Condition::FewShot => CurrentView::FewShot(view),
                }
            }
            Current::Rating(item) => CurrentView::Quality(RatingView {
                item: item.item_index,
                total: state.plan().quality.len(),
                token: token(&item.stimulus),
                scale_min: 1,
                scale_max: 5,
            }),
            Current::Complete => CurrentView::Complete,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub current: CurrentView,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayAck {
    pub slot: Slot,
    pub play_count: u32,
    pub plays_remaining: Option<u32>,
}

/// Acknowledges a stored choice or rating and returns the next step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseAck {
    pub recorded: bool,
    pub next: CurrentView,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    /// Stable machine-readable code such as `replay_forbidden`.
    pub error: String,
    pub message: String,
}

/// Names of every object key in `value`, recursively.
pub fn field_names(value: &serde_json::Value) -> Vec<String> {
    let mut out = Vec::new();
    let mut stack = vec![value];
    while let Some(v) = stack.pop() {
        match v {
            serde_json::Value::Object(map) => {
                for (k, child) in map {
                    out.push(k.clone());
                    stack.push(child);
                }
            }
            serde_json::Value::Array(items) => stack.extend(items),
            _ => {}
        }
    }
    out
}
