//! Round lifecycle: sortition, configuration, semi-commitments, key-member
//! selection, randomness and leader replacement.

pub mod beacon;
pub mod members;
pub mod recovery;
pub mod selection;
pub mod sortition;

pub use beacon::{beacon_commitment, beacon_contribution, genesis_randomness, next_randomness, RoundRandomness};
pub use members::{
    address_label, build_semi_commitment, quorum_signed, verify_commitment_as_partial, AgreedCommitment, ClaimAck,
    CommitmentAck, CommitmentCollector, MemberList, SemiCommitment, SignedMemberList,
};
pub use recovery::{
    reselect_leader, Accusation, ImpeachVote, NewLeaderNotice, Prosecution, RecoveryError, Replacement,
};
pub use selection::{
    difficulty_for, passes, register_participation, role_hash, select_key_members, verify_ticket, Candidate,
    KeyAssignment, PowTicket, SelectionError, SelectionParams,
};
pub use sortition::{crypto_sort, sortition_input, SortitionClaim};

use crate::crypto::KeyPair;
use crate::net::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Common(u32),
    Leader(u32),
    PartialSet(u32),
    Referee,
    /// Registered but assigned nowhere this round.
    Idle,
}

impl Role {
    pub fn committee(&self) -> Option<u32> {
        match self {
            Role::Common(k) | Role::Leader(k) | Role::PartialSet(k) => Some(*k),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Role::Common(_) => "common",
            Role::Leader(_) => "leader",
            Role::PartialSet(_) => "partial",
            Role::Referee => "referee",
            Role::Idle => "idle",
        }
    }

    pub fn is_key(&self) -> bool {
        matches!(self, Role::Leader(_) | Role::PartialSet(_))
    }
}

/// One simulated participant.
#[derive(Clone, Debug)]
pub struct NodeRecord {
    pub id: NodeId,
    pub keys: KeyPair,
    pub address: String,
    pub reputation: f64,
    pub role: Role,
    /// Round from which the node is under adversarial control.
    pub corrupted_from: Option<u64>,
}

impl NodeRecord {
    pub fn is_corrupted_at(&self, round: u64) -> bool {
        self.corrupted_from.is_some_and(|r| r <= round)
    }
}
