//! Vote scoring, reputation bookkeeping and fee distribution.
//!
//! A member's score is the cosine similarity between its vote vector and the
//! decision vector. Reputation is the running sum of scores. Rewards split
//! the round's fees in proportion to g(w), where g(w) = e^w for w ≤ 0 and
//! 1 + ln(w + 1) above zero. A leader found faulty keeps only the cube root of
//! its reputation.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::net::NodeId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReputationError {
    #[error("vote has {vote} entries but the decision has {decision}")]
    DimensionMismatch { vote: usize, decision: usize },
    #[error("score list is not backed by a valid certificate")]
    BadCert,
    #[error("no participants to reward")]
    NoParticipants,
}

/// Yes = +1, No = −1, Unknown = 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vote {
    Yes,
    No,
    Unknown,
}

impl Vote {
    pub fn value(self) -> i8 {
        match self {
            Vote::Yes => 1,
            Vote::No => -1,
            Vote::Unknown => 0,
        }
    }

    pub fn from_value(v: i8) -> Option<Vote> {
        match v {
            1 => Some(Vote::Yes),
            -1 => Some(Vote::No),
            0 => Some(Vote::Unknown),
            _ => None,
        }
    }
}

/// Cosine similarity. An all-Unknown vote scores 0.
pub fn score(vote: &[Vote], decision: &[i8]) -> Result<f64, ReputationError> {
    if vote.len() != decision.len() {
        return Err(ReputationError::DimensionMismatch {
            vote: vote.len(),
            decision: decision.len(),
        });
    }
    let mut dot = 0i64;
    let mut vv = 0i64;
    let mut uu = 0i64;
    for (v, &u) in vote.iter().zip(decision) {
        let v = v.value() as i64;
        let u = u as i64;
        dot += v * u;
        vv += v * v;
        uu += u * u;
    }
    if vv == 0 || uu == 0 {
        return Ok(0.0);
    }
    Ok((dot as f64 / ((vv * uu) as f64).sqrt()).clamp(-1.0, 1.0))
}

/// u_k = +1 when more than half of the full committee said Yes, else −1.
pub fn decision_vector(yes_counts: &[usize], committee_size: usize) -> Vec<i8> {
    yes_counts
        .iter()
        .map(|&y| if 2 * y > committee_size { 1 } else { -1 })
        .collect()
}

pub type ReputationTable = BTreeMap<NodeId, f64>;

/// Adds each listed score to the table, but only when `certified` holds.
pub fn update_reputation(
    table: &mut ReputationTable,
    scores: &[(NodeId, f64)],
    certified: bool,
) -> Result<(), ReputationError> {
    if !certified {
        return Err(ReputationError::BadCert);
    }
    for (id, s) in scores {
        *table.entry(*id).or_insert(0.0) += s;
    }
    Ok(())
}

/// g(w) from the reward rule.
pub fn map_reputation(w: f64) -> f64 {
    if w <= 0.0 {
        w.exp()
    } else {
        1.0 + (w + 1.0).ln()
    }
}

/// Splits `total_fees` in proportion to g(w). Missing table entries count as
/// reputation 0.
pub fn distribute_rewards(
    total_fees: f64,
    table: &ReputationTable,
    participants: &[NodeId],
) -> Result<BTreeMap<NodeId, f64>, ReputationError> {
    if participants.is_empty() {
        return Err(ReputationError::NoParticipants);
    }
    let weights: Vec<(NodeId, f64)> = participants
        .iter()
        .map(|id| (*id, map_reputation(table.get(id).copied().unwrap_or(0.0))))
        .collect();
    let total_weight: f64 = weights.iter().map(|(_, g)| g).sum();
    Ok(weights
        .into_iter()
        .map(|(id, g)| (id, total_fees * g / total_weight))
        .collect())
}

/// Cube root for w ≥ 1; anything below 1 drops to 0 so that punishment never
/// raises a reputation.
pub fn punish_leader(w: f64) -> f64 {
    if w >= 1.0 {
        w.cbrt()
    } else {
        0.0
    }
}
