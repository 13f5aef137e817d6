//! Rebuilds session state by replaying the event log.

use std::collections::{BTreeMap, HashMap};

use anonbench_core::protocol::{
    export_responses, generate_session, Condition, Gender, ProtocolError, ResponseKind, ResponseRecord, SessionEvent,
    SessionPlan, SessionState, StudyConfig, Table3Row, Table5Row,
};
use thiserror::Error;

use crate::store::StoreEvent;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("log does not start with the study configuration")]
    MissingStudy,
    #[error("event {index}: {message}")]
    Inconsistent { index: usize, message: String },
    #[error("event {index}: {source}")]
    Protocol {
        index: usize,
        #[source]
        source: ProtocolError,
    },
}

#[derive(Debug, Clone)]
pub struct SessionRecord {
    pub session_id: String,
    pub listener_id: String,
    pub tokens: BTreeMap<String, String>,
    pub state: SessionState,
}

#[derive(Debug, Clone)]
pub struct StudySnapshot {
    pub config: StudyConfig,
    /// In creation order.
    pub sessions: Vec<SessionRecord>,
}

/// The event that produced `record`.
pub fn event_for(record: &ResponseRecord) -> SessionEvent {
    match record.kind {
        ResponseKind::Discrimination { condition, trial_index, chosen, .. } => {
            SessionEvent::Choose { condition, trial: trial_index, slot: chosen }
        }
        ResponseKind::Quality { item_index, rating } => SessionEvent::Rate { item: item_index, rating },
    }
}

pub fn replay(events: &[StoreEvent]) -> Result<StudySnapshot, ReplayError> {
    let Some(StoreEvent::Study { config }) = events.first() else {
        return Err(ReplayError::MissingStudy);
    };
    let mut sessions: Vec<SessionRecord> = Vec::new();
    let mut index_of: HashMap<String, usize> = HashMap::new();

    for (index, event) in events.iter().enumerate().skip(1) {
        let bad = |message: String| ReplayError::Inconsistent { index, message };
        let proto = |source| ReplayError::Protocol { index, source };
        match event {
            StoreEvent::Study { .. } => return Err(bad("second study record".into())),
            StoreEvent::SessionCreated { session_id, listener_id, tokens, .. } => {
                if index_of.contains_key(session_id) {
                    return Err(bad(format!("session {session_id} created twice")));
                }
                if sessions.iter().any(|s| &s.listener_id == listener_id) {
                    return Err(bad(format!("listener {listener_id} has two sessions")));
                }
                let plan = generate_session(config, listener_id).map_err(proto)?;
                index_of.insert(session_id.clone(), sessions.len());
                sessions.push(SessionRecord {
                    session_id: session_id.clone(),
                    listener_id: listener_id.clone(),
                    tokens: tokens.clone(),
                    state: SessionState::new(plan),
                });
            }
            StoreEvent::Play { session_id, condition, trial, slot, timestamp_ms } => {
                let i = *index_of.get(session_id).ok_or_else(|| bad(format!("unknown session {session_id}")))?;
                let ev = SessionEvent::Play { condition: *condition, trial: *trial, slot: *slot };
                sessions[i].state.apply(&ev, *timestamp_ms).map_err(proto)?;
            }
            StoreEvent::Response { session_id, record } => {
                let i = *index_of.get(session_id).ok_or_else(|| bad(format!("unknown session {session_id}")))?;
                let produced = sessions[i].state.apply(&event_for(record), record.timestamp_ms).map_err(proto)?;
                if produced.as_ref() != Some(record) {
                    return Err(bad(format!("stored response differs from replay: {record:?} vs {produced:?}")));
                }
            }
        }
    }
    Ok(StudySnapshot { config: config.clone(), sessions })
}

/// Per-stimulus-pair accuracy pooled over listeners.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeakerAccuracy {
    pub pair_index: usize,
    pub group: String,
    pub gender: Option<Gender>,
    pub condition: Condition,
    pub correct: u64,
    pub total: u64,
    pub accuracy_percent: f64,
}

impl StudySnapshot {
    pub fn plans(&self) -> Vec<SessionPlan> {
        self.sessions.iter().map(|s| s.state.plan().clone()).collect()
    }

    pub fn responses(&self) -> Vec<ResponseRecord> {
        self.sessions.iter().flat_map(|s| s.state.responses().iter().cloned()).collect()
    }

    pub fn export(&self) -> Result<(Vec<Table3Row>, Vec<Table5Row>), ProtocolError> {
        export_responses(&self.responses(), &self.plans())
    }

    /// Accuracy for every pair with at least one answered trial, ordered by
    /// condition then pair index.
    pub fn speaker_accuracy(&self) -> Vec<SpeakerAccuracy> {
        let mut counts: BTreeMap<(Condition, usize), (u64, u64)> = BTreeMap::new();
        for s in &self.sessions {
            let plan = s.state.plan();
            for r in s.state.responses() {
                if let ResponseKind::Discrimination { condition, trial_index, chosen, .. } = r.kind {
                    let trial = &plan.trials(condition)[trial_index];
                    let c = counts.entry((condition, trial.pair_index)).or_default();
                    c.0 += u64::from(chosen == trial.original_slot);
                    c.1 += 1;
                }
            }
        }
        counts
            .into_iter()
            .map(|((condition, pair_index), (correct, total))| {
                let pair = &self.config.pairs[pair_index];
                SpeakerAccuracy {
                    pair_index,
                    group: pair.group.clone(),
                    gender: pair.gender,
                    condition,
                    correct,
                    total,
                    accuracy_percent: 100.0 * correct as f64 / total as f64,
                }
            })
            .collect()
    }
}
