use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::session::{ResponseKind, ResponseRecord, SessionPlan};
use super::{Condition, ProtocolError, Variant};
use crate::stats::{accuracy, normalized_quality_score};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyCell {
    pub listener_id: String,
    pub group: String,
    pub condition: Condition,
    pub correct: u64,
    pub total: u64,
    pub accuracy_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityCell {
    pub listener_id: String,
    pub group: String,
    pub variant: Variant,
    pub ratings: Vec<u8>,
    pub quality_percent: f64,
}

/// Group order of a plan: by the first pair index that uses each group.
fn group_rank(plan: &SessionPlan) -> HashMap<&str, usize> {
    let mut rank: HashMap<&str, usize> = HashMap::new();
    for t in &plan.zero_shot {
        let r = rank.entry(t.group.as_str()).or_insert(t.pair_index);
        *r = (*r).min(t.pair_index);
    }
    rank
}

fn find_plan<'a>(plans: &'a [SessionPlan], listener: &str) -> Result<(usize, &'a SessionPlan), ProtocolError> {
    plans
        .iter()
        .enumerate()
        .find(|(_, p)| p.listener_id == listener)
        .ok_or_else(|| ProtocolError::OrphanResponse(format!("no session for listener {listener:?}")))
}

/// Per (listener, group, condition) accuracy. Cells come out in plan order,
/// then condition, then group in study order.
pub fn score_discrimination(
    responses: &[ResponseRecord],
    plans: &[SessionPlan],
) -> Result<Vec<AccuracyCell>, ProtocolError> {
    let mut tallies: HashMap<(usize, Condition, String), (u64, u64)> = HashMap::new();
    for r in responses {
        let ResponseKind::Discrimination { condition, trial_index, chosen, .. } = r.kind else {
            continue;
        };
        let (li, plan) = find_plan(plans, &r.listener_id)?;
        let trial = plan.trials(condition).get(trial_index).ok_or_else(|| {
            ProtocolError::OrphanResponse(format!("{} {condition} trial {trial_index}", r.listener_id))
        })?;
        let t = tallies.entry((li, condition, trial.group.clone())).or_default();
        t.0 += u64::from(chosen == trial.original_slot);
        t.1 += 1;
    }
    let mut cells: Vec<((usize, Condition, usize), AccuracyCell)> = tallies
        .into_iter()
        .map(|((li, condition, group), (correct, total))| {
            let rank = group_rank(&plans[li]).get(group.as_str()).copied().unwrap_or(usize::MAX);
            let cell = AccuracyCell {
                listener_id: plans[li].listener_id.clone(),
                group,
                condition,
                correct,
                total,
                accuracy_percent: accuracy(correct, total).expect("total > 0"),
            };
            ((li, condition, rank), cell)
        })
        .collect();
    cells.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.group.cmp(&b.1.group)));
    Ok(cells.into_iter().map(|(_, c)| c).collect())
}

/// Per (listener, group, variant) normalized quality score.
pub fn score_quality(responses: &[ResponseRecord], plans: &[SessionPlan]) -> Result<Vec<QualityCell>, ProtocolError> {
    let mut ratings: HashMap<(usize, Variant, String), Vec<u8>> = HashMap::new();
    for r in responses {
        let ResponseKind::Quality { item_index, rating } = r.kind else {
            continue;
        };
        let (li, plan) = find_plan(plans, &r.listener_id)?;
        let item = plan
            .quality
            .get(item_index)
            .ok_or_else(|| ProtocolError::OrphanResponse(format!("{} quality item {item_index}", r.listener_id)))?;
        ratings.entry((li, item.variant, item.group.clone())).or_default().push(rating);
    }
    let mut cells = Vec::with_capacity(ratings.len());
    for ((li, variant, group), rs) in ratings {
        let rank = group_rank(&plans[li]).get(group.as_str()).copied().unwrap_or(usize::MAX);
        let quality_percent = normalized_quality_score(&rs).map_err(|e| ProtocolError::Format(e.to_string()))?;
        let cell =
            QualityCell { listener_id: plans[li].listener_id.clone(), group, variant, ratings: rs, quality_percent };
        cells.push(((li, variant, rank), cell));
    }
    cells.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.group.cmp(&b.1.group)));
    Ok(cells.into_iter().map(|(_, c)| c).collect())
}
