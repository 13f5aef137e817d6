use serde::{Deserialize, Serialize};

use super::rng::{coin, phase_rng, shuffle};
use super::{Condition, ProtocolError, Slot, StudyConfig, Variant};

/// One discrimination trial. Server-side only: it carries the truth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialPair {
    pub trial_index: usize,
    pub listener_id: String,
    pub condition: Condition,
    /// Index into `StudyConfig::pairs`.
    pub pair_index: usize,
    pub slot_a: String,
    pub slot_b: String,
    pub original_slot: Slot,
    pub group: String,
}

impl TrialPair {
    pub fn stimulus(&self, slot: Slot) -> &str {
        match slot {
            Slot::A => &self.slot_a,
            Slot::B => &self.slot_b,
        }
    }
}

/// One single-stimulus quality rating trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QualityItem {
    pub item_index: usize,
    pub pair_index: usize,
    pub stimulus: String,
    pub variant: Variant,
    pub group: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionPlan {
    pub listener_id: String,
    pub zero_shot: Vec<TrialPair>,
    pub few_shot: Vec<TrialPair>,
    pub quality: Vec<QualityItem>,
}

impl SessionPlan {
    pub fn trials(&self, condition: Condition) -> &[TrialPair] {
        match condition {
            Condition::ZeroShot => &self.zero_shot,
            Condition::FewShot => &self.few_shot,
        }
    }
}

fn discrimination_trials(config: &StudyConfig, listener_id: &str, condition: Condition) -> Vec<TrialPair> {
    let mut rng = phase_rng(config.seed_base, listener_id, &condition.to_string());
    let mut order: Vec<usize> = (0..config.pairs.len()).collect();
    shuffle(&mut rng, &mut order);
    order
        .into_iter()
        .enumerate()
        .map(|(trial_index, pair_index)| {
            let pair = &config.pairs[pair_index];
            let original_slot = if coin(&mut rng) { Slot::A } else { Slot::B };
            let (slot_a, slot_b) = match original_slot {
                Slot::A => (pair.orig.clone(), pair.anon.clone()),
                Slot::B => (pair.anon.clone(), pair.orig.clone()),
            };
            TrialPair {
                trial_index,
                listener_id: listener_id.to_string(),
                condition,
                pair_index,
                slot_a,
                slot_b,
                original_slot,
                group: pair.group.clone(),
            }
        })
        .collect()
}

/// Builds a listener's plan: zero-shot and few-shot trials with independent
/// pair orders and slot draws, then every stimulus once for quality rating
/// in a third independent order.
pub fn generate_session(config: &StudyConfig, listener_id: &str) -> Result<SessionPlan, ProtocolError> {
    config.validate()?;
    let zero_shot = discrimination_trials(config, listener_id, Condition::ZeroShot);
    let few_shot = discrimination_trials(config, listener_id, Condition::FewShot);

    let mut stimuli: Vec<(usize, Variant)> =
        (0..config.pairs.len()).flat_map(|i| [(i, Variant::Orig), (i, Variant::Anon)]).collect();
    let mut rng = phase_rng(config.seed_base, listener_id, "quality");
    shuffle(&mut rng, &mut stimuli);
    let quality = stimuli
        .into_iter()
        .enumerate()
        .map(|(item_index, (pair_index, variant))| {
            let pair = &config.pairs[pair_index];
            QualityItem {
                item_index,
                pair_index,
                stimulus: match variant {
                    Variant::Orig => pair.orig.clone(),
                    Variant::Anon => pair.anon.clone(),
                },
                variant,
                group: pair.group.clone(),
            }
        })
        .collect();
    Ok(SessionPlan { listener_id: listener_id.to_string(), zero_shot, few_shot, quality })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    ZeroShot,
    FewShot,
    Quality,
    Complete,
}

impl Phase {
    fn condition(self) -> Option<Condition> {
        match self {
            Phase::ZeroShot => Some(Condition::ZeroShot),
            Phase::FewShot => Some(Condition::FewShot),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SessionEvent {
    Play { condition: Condition, trial: usize, slot: Slot },
    Choose { condition: Condition, trial: usize, slot: Slot },
    Rate { item: usize, rating: u8 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum ResponseKind {
    Discrimination { condition: Condition, trial_index: usize, chosen: Slot, play_counts: [u32; 2] },
    Quality { item_index: usize, rating: u8 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub listener_id: String,
    #[serde(flatten)]
    pub kind: ResponseKind,
    /// Milliseconds since the Unix epoch, supplied by the caller.
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Current<'a> {
    Discrimination { trial: &'a TrialPair, play_counts: [u32; 2] },
    Rating(&'a QualityItem),
    Complete,
}

/// Progress of one listener through the three phases.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    plan: SessionPlan,
    phase: Phase,
    cursor: usize,
    play_counts: [Vec<[u32; 2]>; 2],
    answered: [Vec<bool>; 2],
    rated: Vec<bool>,
    responses: Vec<ResponseRecord>,
}

impl SessionState {
    pub fn new(plan: SessionPlan) -> Self {
        let n = plan.zero_shot.len();
        let mut state = Self {
            play_counts: [vec![[0, 0]; n], vec![[0, 0]; plan.few_shot.len()]],
            answered: [vec![false; n], vec![false; plan.few_shot.len()]],
            rated: vec![false; plan.quality.len()],
            plan,
            phase: Phase::ZeroShot,
            cursor: 0,
            responses: Vec::new(),
        };
        state.settle();
        state
    }

    pub fn plan(&self) -> &SessionPlan {
        &self.plan
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    /// Index of the current trial or item within the phase.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn responses(&self) -> &[ResponseRecord] {
        &self.responses
    }

    pub fn current(&self) -> Current<'_> {
        match self.phase {
            Phase::ZeroShot | Phase::FewShot => {
                let c = self.phase.condition().expect("discrimination phase");
                Current::Discrimination {
                    trial: &self.plan.trials(c)[self.cursor],
                    play_counts: self.play_counts[c as usize][self.cursor],
                }
            }
            Phase::Quality => Current::Rating(&self.plan.quality[self.cursor]),
            Phase::Complete => Current::Complete,
        }
    }

    /// Skips over empty phases.
    fn settle(&mut self) {
        loop {
            let len = match self.phase {
                Phase::ZeroShot => self.plan.zero_shot.len(),
                Phase::FewShot => self.plan.few_shot.len(),
                Phase::Quality => self.plan.quality.len(),
                Phase::Complete => return,
            };
            if self.cursor < len {
                return;
            }
            self.cursor = 0;
            self.phase = match self.phase {
                Phase::ZeroShot => Phase::FewShot,
                Phase::FewShot => Phase::Quality,
                _ => Phase::Complete,
            };
        }
    }

    fn check_discrimination(&self, condition: Condition, trial: usize) -> Result<(), ProtocolError> {
        let answered = &self.answered[condition as usize];
        if trial >= answered.len() {
            return Err(ProtocolError::OutOfPhaseEvent(format!("{condition} trial {trial} does not exist")));
        }
        if answered[trial] {
            return Err(ProtocolError::DuplicateResponse(format!("{condition} trial {trial}")));
        }
        if self.phase.condition() != Some(condition) || self.cursor != trial {
            return Err(ProtocolError::OutOfPhaseEvent(format!(
                "{condition} trial {trial} is not current (phase {:?}, position {})",
                self.phase, self.cursor
            )));
        }
        Ok(())
    }

    /// Validates `event` without changing state.
    pub fn check(&self, event: &SessionEvent) -> Result<(), ProtocolError> {
        match *event {
            SessionEvent::Play { condition, trial, slot } => {
                self.check_discrimination(condition, trial)?;
                if condition == Condition::ZeroShot && self.play_counts[0][trial][slot.index()] >= 1 {
                    return Err(ProtocolError::ReplayForbidden { condition, trial, slot });
                }
                Ok(())
            }
            SessionEvent::Choose { condition, trial, .. } => self.check_discrimination(condition, trial),
            SessionEvent::Rate { item, rating } => {
                if !(1..=5).contains(&rating) {
                    return Err(ProtocolError::InvalidRating(rating));
                }
                if item >= self.rated.len() {
                    return Err(ProtocolError::OutOfPhaseEvent(format!("quality item {item} does not exist")));
                }
                if self.rated[item] {
                    return Err(ProtocolError::DuplicateResponse(format!("quality item {item}")));
                }
                if self.phase != Phase::Quality || self.cursor != item {
                    return Err(ProtocolError::OutOfPhaseEvent(format!(
                        "quality item {item} is not current (phase {:?}, position {})",
                        self.phase, self.cursor
                    )));
                }
                Ok(())
            }
        }
    }

    /// Applies `event`, returning the response it produced, if any.
    pub fn apply(&mut self, event: &SessionEvent, timestamp_ms: u64) -> Result<Option<ResponseRecord>, ProtocolError> {
        self.check(event)?;
        let record = match *event {
            SessionEvent::Play { condition, trial, slot } => {
                self.play_counts[condition as usize][trial][slot.index()] += 1;
                return Ok(None);
            }
            SessionEvent::Choose { condition, trial, slot } => {
                self.answered[condition as usize][trial] = true;
                ResponseRecord {
                    listener_id: self.plan.listener_id.clone(),
                    kind: ResponseKind::Discrimination {
                        condition,
                        trial_index: trial,
                        chosen: slot,
                        play_counts: self.play_counts[condition as usize][trial],
                    },
                    timestamp_ms,
                }
            }
            SessionEvent::Rate { item, rating } => {
                self.rated[item] = true;
                ResponseRecord {
                    listener_id: self.plan.listener_id.clone(),
                    kind: ResponseKind::Quality { item_index: item, rating },
                    timestamp_ms,
                }
            }
        };
        self.cursor += 1;
        self.settle();
        self.responses.push(record.clone());
        Ok(Some(record))
    }
}
