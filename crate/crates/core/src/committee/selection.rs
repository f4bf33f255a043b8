//! Participation tickets and the choice of next round's key members.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::codec::Encoder;
use crate::crypto::{hash, Digest, PublicKey};
use crate::net::NodeId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SelectionError {
    #[error("participation ticket does not verify")]
    BadTicket,
    #[error("{have} participants cannot fill {need} key-member and referee seats")]
    InsufficientParticipants { have: usize, need: usize },
}

/// Proof of work submitted to take part in round `round`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PowTicket {
    pub key: PublicKey,
    pub round: u64,
    pub nonce: u64,
}

fn pow_digest(round: u64, randomness: &Digest, key: &PublicKey, nonce: u64) -> Digest {
    let mut e = Encoder::new("POW");
    e.u64(round).digest(randomness).key(key).u64(nonce);
    hash(&e.into_bytes())
}

/// Searches nonces 0, 1, 2, ... for a ticket below `difficulty`. Returns the
/// ticket and the number of hash evaluations it took.
pub fn register_participation(
    key: PublicKey,
    round: u64,
    randomness: &Digest,
    difficulty: &Digest,
) -> (PowTicket, u64) {
    let mut nonce = 0u64;
    loop {
        if pow_digest(round, randomness, &key, nonce) <= *difficulty {
            return (PowTicket { key, round, nonce }, nonce + 1);
        }
        nonce += 1;
    }
}

pub fn verify_ticket(
    ticket: &PowTicket,
    round: u64,
    randomness: &Digest,
    difficulty: &Digest,
) -> Result<(), SelectionError> {
    if ticket.round == round && pow_digest(round, randomness, &ticket.key, ticket.nonce) <= *difficulty {
        Ok(())
    } else {
        Err(SelectionError::BadTicket)
    }
}

/// H(r+1 ∥ R^r ∥ PK ∥ role).
pub fn role_hash(next_round: u64, randomness: &Digest, key: &PublicKey, role: &str) -> Digest {
    let mut e = Encoder::new("ROLE");
    e.u64(next_round).digest(randomness).key(key).bytes(role.as_bytes());
    hash(&e.into_bytes())
}

/// A role filter passes when the role hash does not exceed the target.
pub fn passes(h: &Digest, difficulty: &Digest) -> bool {
    h <= difficulty
}

/// Target giving each of `population` candidates probability
/// `expected / population` of passing.
pub fn difficulty_for(expected: f64, population: usize) -> Digest {
    if population == 0 {
        return Digest::ZERO;
    }
    Digest::scaled_max(expected / population as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub id: NodeId,
    pub key: PublicKey,
    pub reputation: f64,
}

/// Key members of one round.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct KeyAssignment {
    pub round: u64,
    /// `leaders[k]` leads committee k.
    pub leaders: Vec<NodeId>,
    /// `partial[k]` is C_{k,partial}, ordered by role hash.
    pub partial: Vec<Vec<NodeId>>,
    pub referee: Vec<NodeId>,
}

impl KeyAssignment {
    pub fn committees(&self) -> u32 {
        self.leaders.len() as u32
    }

    pub fn is_key_member(&self, id: NodeId) -> bool {
        self.leaders.contains(&id) || self.partial.iter().any(|p| p.contains(&id))
    }

    pub fn is_referee(&self, id: NodeId) -> bool {
        self.referee.contains(&id)
    }

    /// Committee a key member belongs to.
    pub fn committee_of(&self, id: NodeId) -> Option<u32> {
        if let Some(k) = self.leaders.iter().position(|&l| l == id) {
            return Some(k as u32);
        }
        self.partial.iter().position(|p| p.contains(&id)).map(|k| k as u32)
    }

    pub fn key_members(&self, committee: u32) -> Vec<NodeId> {
        let mut out = vec![self.leaders[committee as usize]];
        out.extend(self.partial[committee as usize].iter().copied());
        out
    }

    pub fn all_key_members(&self) -> Vec<NodeId> {
        (0..self.committees()).flat_map(|k| self.key_members(k)).collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SelectionParams {
    pub next_round: u64,
    pub committees: u32,
    pub partial_size: usize,
    pub referee_target: f64,
    pub min_referee: usize,
}

/// Chooses leaders, the referee committee and partial sets for `next_round`.
///
/// Leaders are the m highest reputations; ties go to the smaller H(R ∥ PK),
/// and the i-th leader takes committee i. Among the rest, the referee filter
/// targets `referee_target` members. The partial filter oversamples 3λm
/// candidates, maps each to committee H mod m and keeps the λ smallest hashes
/// per committee; committees left short are filled from the remaining nodes
/// in ascending partial-hash order.
pub fn select_key_members(
    candidates: &[Candidate],
    randomness: &Digest,
    params: SelectionParams,
) -> Result<KeyAssignment, SelectionError> {
    let m = params.committees as usize;
    let lambda = params.partial_size;
    let need = m * (lambda + 1) + params.min_referee;
    if candidates.len() < need {
        return Err(SelectionError::InsufficientParticipants {
            have: candidates.len(),
            need,
        });
    }
    let mut ranked: Vec<(&Candidate, Digest)> = candidates
        .iter()
        .map(|c| {
            let mut e = Encoder::new("LEADER_TIE");
            e.digest(randomness).key(&c.key);
            (c, hash(&e.into_bytes()))
        })
        .collect();
    ranked.sort_by(|(a, ha), (b, hb)| {
        b.reputation
            .partial_cmp(&a.reputation)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(ha.cmp(hb))
    });
    let leaders: Vec<NodeId> = ranked[..m].iter().map(|(c, _)| c.id).collect();
    let taken: BTreeSet<NodeId> = leaders.iter().copied().collect();

    let rest: Vec<&Candidate> = candidates.iter().filter(|c| !taken.contains(&c.id)).collect();
    let ref_target = difficulty_for(params.referee_target, rest.len());
    let mut by_ref: Vec<(Digest, NodeId)> = rest
        .iter()
        .map(|c| (role_hash(params.next_round, randomness, &c.key, "referee"), c.id))
        .collect();
    by_ref.sort();
    let mut referee: Vec<NodeId> = by_ref
        .iter()
        .filter(|(h, _)| passes(h, &ref_target))
        .map(|(_, id)| *id)
        .collect();
    // Keep enough nodes for the partial sets and at least the minimum referee.
    let max_referee = rest.len() - m * lambda;
    referee.truncate(max_referee);
    for (_, id) in &by_ref {
        if referee.len() >= params.min_referee {
            break;
        }
        if !referee.contains(id) {
            referee.push(*id);
        }
    }
    referee.sort();
    let ref_set: BTreeSet<NodeId> = referee.iter().copied().collect();

    let pool: Vec<&Candidate> = rest.into_iter().filter(|c| !ref_set.contains(&c.id)).collect();
    let part_target = difficulty_for((3 * lambda * m) as f64, pool.len());
    let mut by_part: Vec<(Digest, NodeId)> = pool
        .iter()
        .map(|c| (role_hash(params.next_round, randomness, &c.key, "partial"), c.id))
        .collect();
    by_part.sort();
    let mut partial: Vec<Vec<NodeId>> = vec![Vec::new(); m];
    let mut used = BTreeSet::new();
    for (h, id) in &by_part {
        if !passes(h, &part_target) {
            continue;
        }
        let k = h.mod_u64(m as u64) as usize;
        if partial[k].len() < lambda {
            partial[k].push(*id);
            used.insert(*id);
        }
    }
    let mut spare = by_part.iter().filter(|(_, id)| !used.contains(id)).map(|(_, id)| *id);
    for set in partial.iter_mut() {
        while set.len() < lambda {
            set.push(spare.next().expect("participant count checked above"));
        }
    }
    Ok(KeyAssignment {
        round: params.next_round,
        leaders,
        partial,
        referee,
    })
}
