//! Byzantine behaviour library and the corruption scheduler.
//!
//! A corrupted node keeps the honest code path except where its strategy
//! overrides a decision. Strategies only ever sign with keys of corrupted
//! nodes, so anything they emit under an honest key fails verification.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::codec::Encoder;
use crate::consensus::ProposeHeader;
use crate::crypto::hash;
use crate::net::NodeId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdversaryError {
    #[error("round {round}: {active} corrupted nodes out of {n} is not below one third")]
    BudgetExceeded { round: u64, active: usize, n: usize },
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
}

/// Deviations a corrupted node can run. Each one is active only while the
/// node holds the role it targets; otherwise the node follows the protocol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// Leader proposes two different intra-committee payloads under one
    /// sequence number, one to each half of the committee.
    EquivocatingLeader,
    /// Leader acknowledges every claim but leaves one acknowledged member
    /// out of the list it commits to.
    ForgedMemberList,
    /// Leader sends the referee committee a different list from the one it
    /// shows its partial set.
    FalseSemiCommitment,
    /// Leader slips an unregistered key into its member list.
    UnregisteredMember,
    /// Source leader drops one transaction from a forwarded cross-shard list
    /// while keeping the original certificate.
    ConcealingCrossShardLeader,
    /// Source leader adds a transaction to a forwarded cross-shard list.
    ImitatingCrossShardLeader,
    /// Source leader forwards cross-shard lists only to the destination
    /// partial set.
    SilentCrossShardLeader,
    /// Partial member fabricates evidence against its leader, and corrupted
    /// members approve it.
    FramingPartialMember,
    /// Votes the opposite of the honest verdict.
    VoteInverter,
    /// Votes uniformly at random.
    RandomVoter,
    /// Sends nothing at all.
    Offline,
}

impl Strategy {
    pub const ALL: [Strategy; 11] = [
        Strategy::EquivocatingLeader,
        Strategy::ForgedMemberList,
        Strategy::FalseSemiCommitment,
        Strategy::UnregisteredMember,
        Strategy::ConcealingCrossShardLeader,
        Strategy::ImitatingCrossShardLeader,
        Strategy::SilentCrossShardLeader,
        Strategy::FramingPartialMember,
        Strategy::VoteInverter,
        Strategy::RandomVoter,
        Strategy::Offline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::EquivocatingLeader => "EquivocatingLeader",
            Strategy::ForgedMemberList => "ForgedMemberList",
            Strategy::FalseSemiCommitment => "FalseSemiCommitment",
            Strategy::UnregisteredMember => "UnregisteredMember",
            Strategy::ConcealingCrossShardLeader => "ConcealingCrossShardLeader",
            Strategy::ImitatingCrossShardLeader => "ImitatingCrossShardLeader",
            Strategy::SilentCrossShardLeader => "SilentCrossShardLeader",
            Strategy::FramingPartialMember => "FramingPartialMember",
            Strategy::VoteInverter => "VoteInverter",
            Strategy::RandomVoter => "RandomVoter",
            Strategy::Offline => "Offline",
        }
    }

    /// Strategies whose deviation a correct recovery procedure must punish.
    pub fn is_leader_fault(self) -> bool {
        matches!(
            self,
            Strategy::EquivocatingLeader
                | Strategy::ForgedMemberList
                | Strategy::FalseSemiCommitment
                | Strategy::UnregisteredMember
                | Strategy::ConcealingCrossShardLeader
                | Strategy::ImitatingCrossShardLeader
        )
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = AdversaryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .iter()
            .copied()
            .find(|x| x.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| AdversaryError::UnknownStrategy(s.to_string()))
    }
}

/// Who the adversary controls and from when.
///
/// `initial` is corrupted from round 0. A request issued in round r takes
/// effect in round r + 1.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorruptionPlan {
    pub initial: BTreeSet<NodeId>,
    pub requests: Vec<(u64, BTreeSet<NodeId>)>,
}

impl CorruptionPlan {
    pub fn is_empty(&self) -> bool {
        self.initial.is_empty() && self.requests.iter().all(|(_, s)| s.is_empty())
    }

    /// Nodes under adversarial control in `round` out of `n`.
    pub fn corrupt(&self, round: u64, n: usize) -> Result<BTreeSet<NodeId>, AdversaryError> {
        let mut active = self.initial.clone();
        for (at, set) in &self.requests {
            if *at < round {
                active.extend(set.iter().copied());
            }
        }
        if 3 * active.len() >= n && !active.is_empty() {
            return Err(AdversaryError::BudgetExceeded {
                round,
                active: active.len(),
                n,
            });
        }
        Ok(active)
    }

    /// First round in which `node` is corrupted, if any.
    pub fn activation(&self, node: NodeId) -> Option<u64> {
        if self.initial.contains(&node) {
            return Some(0);
        }
        self.requests
            .iter()
            .filter(|(_, s)| s.contains(&node))
            .map(|(r, _)| r + 1)
            .min()
    }
}

/// Seeded generator private to one (node, round, purpose) triple.
pub fn adversary_rng(seed: u64, node: NodeId, round: u64, purpose: &str) -> ChaCha8Rng {
    let mut e = Encoder::new("ADVERSARY_RNG");
    e.u64(seed).u32(node.0).u64(round).bytes(purpose.as_bytes());
    let d = hash(&e.into_bytes());
    ChaCha8Rng::from_seed(d.0)
}

/// State shared by colluding corrupted nodes: leader-signed material they
/// have seen, which framing attempts try to recombine.
#[derive(Clone, Debug, Default)]
pub struct Blackboard {
    headers: BTreeMap<NodeId, Vec<ProposeHeader>>,
}

impl Blackboard {
    pub fn record_header(&mut self, header: &ProposeHeader) {
        let seen = self.headers.entry(header.id.leader).or_default();
        if !seen.iter().any(|h| h.sig == header.sig) {
            seen.push(header.clone());
        }
    }

    pub fn headers_of(&self, leader: NodeId) -> &[ProposeHeader] {
        self.headers.get(&leader).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn clear(&mut self) {
        self.headers.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn ids(v: &[u32]) -> BTreeSet<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn request_takes_a_round() {
        let plan = CorruptionPlan {
            initial: BTreeSet::new(),
            requests: vec![(2, ids(&[5]))],
        };
        assert!(plan.corrupt(2, 30).unwrap().is_empty());
        assert_eq!(plan.corrupt(3, 30).unwrap(), ids(&[5]));
        assert_eq!(plan.activation(NodeId(5)), Some(3));
    }

    #[test]
    fn budget_is_strict() {
        // n = 30: ceil(30/3) = 10 corrupted is too many, 9 is fine.
        let plan = CorruptionPlan {
            initial: ids(&(0..10).collect::<Vec<_>>()),
            requests: vec![],
        };
        assert!(matches!(
            plan.corrupt(0, 30),
            Err(AdversaryError::BudgetExceeded { active: 10, .. })
        ));
        let plan = CorruptionPlan {
            initial: ids(&(0..9).collect::<Vec<_>>()),
            requests: vec![],
        };
        assert_eq!(plan.corrupt(0, 30).unwrap().len(), 9);
    }

    #[test]
    fn empty_plan_is_harmless() {
        let plan = CorruptionPlan::default();
        assert!(plan.is_empty());
        for r in 0..10 {
            assert!(plan.corrupt(r, 4).unwrap().is_empty());
        }
    }

    #[test]
    fn names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("Nope".parse::<Strategy>().is_err());
    }

    #[test]
    fn rng_is_reproducible_and_separated() {
        let a: u64 = adversary_rng(1, NodeId(2), 3, "vote").gen();
        let b: u64 = adversary_rng(1, NodeId(2), 3, "vote").gen();
        let c: u64 = adversary_rng(1, NodeId(2), 3, "frame").gen();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
