//! What each simulated node knows during a round.

use std::collections::{BTreeMap, BTreeSet};

use crate::committee::{
    AgreedCommitment, ClaimAck, CommitmentCollector, MemberList, NewLeaderNotice, PowTicket, Prosecution, Role,
    SignedMemberList, SortitionClaim,
};
use crate::consensus::{ConsensusInstance, InstanceId, Roster};
use crate::crypto::{Digest, KeyPair, PublicKey};
use crate::ledger::{CrossList, CrossResult, SignedForward, SignedTxList, TxDecision, VoteVector};
use crate::net::{NodeId, Tick};

use super::message::{BlockProposal, Phase, SimPayload};

/// A committee leader's working state. Replacement leaders get a fresh one.
#[derive(Debug)]
pub(super) struct Lead {
    pub committee: u32,
    pub epoch: u32,
    pub seq: u64,
    /// List committed to the referee committee.
    pub committed: Option<SignedMemberList>,
    /// List shown to the partial set; differs only for a lying leader.
    pub shown: Option<SignedMemberList>,
    pub agreed: Option<AgreedCommitment>,
    pub final_sent: bool,
    pub acked: BTreeSet<PublicKey>,
    pub tx_list: Option<SignedTxList>,
    pub votes: BTreeMap<NodeId, VoteVector>,
    pub intra: Option<InstanceId>,
    pub decision: Option<TxDecision>,
    pub cross: BTreeMap<InstanceId, CrossList>,
    /// Forwards addressed to this committee, waiting for a roster.
    pub inbound: Vec<SignedForward>,
    pub accepting: BTreeSet<Digest>,
}

impl Lead {
    pub fn new(committee: u32, epoch: u32) -> Self {
        Lead {
            committee,
            epoch,
            seq: 0,
            committed: None,
            shown: None,
            agreed: None,
            final_sent: false,
            acked: BTreeSet::new(),
            tx_list: None,
            votes: BTreeMap::new(),
            intra: None,
            decision: None,
            cross: BTreeMap::new(),
            inbound: Vec::new(),
            accepting: BTreeSet::new(),
        }
    }

    pub fn next_seq(&mut self) -> u64 {
        let s = self.seq;
        self.seq += 1;
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Eviction {
    pub round: u64,
    pub committee: u32,
    pub old: NodeId,
    pub new: NodeId,
    pub old_corrupted: bool,
    pub kind: &'static str,
}

/// A referee member's working state.
#[derive(Debug)]
pub(super) struct Referee {
    pub roster: Roster,
    pub proposer: NodeId,
    pub seq: u64,
    pub current: Vec<(NodeId, PublicKey)>,
    /// When each current leader took office; its semi-commitment is due
    /// 8Δ + Γ later.
    pub appointed: Vec<Tick>,
    /// Semi-commitments from current leaders not yet put in a table.
    pub semis: BTreeMap<(u32, PublicKey), SignedMemberList>,
    /// Leaders whose semi-commitment already went through a table.
    pub tabled: BTreeSet<(u32, PublicKey)>,
    pub table_armed: bool,
    pub first_table: bool,
    /// Member lists the committee agreed on, by (committee, leader key).
    pub rosters: BTreeMap<(u32, PublicKey), MemberList>,
    pub evicted: Vec<(u32, NodeId, &'static str)>,
    pub replacing: BTreeSet<u32>,
    pub prosecutions: BTreeMap<Digest, Prosecution>,
    pub decisions: BTreeMap<u32, (NodeId, TxDecision)>,
    pub cross: BTreeMap<Digest, CrossResult>,
    pub tickets: BTreeMap<NodeId, PowTicket>,
    pub commits: BTreeMap<NodeId, Digest>,
    pub reveals: BTreeMap<NodeId, Digest>,
    pub contribution: Digest,
    /// Referee decisions already applied, by result digest.
    pub applied: BTreeSet<Digest>,
    pub block: Option<BlockProposal>,
}

impl Referee {
    pub fn next_seq(&mut self) -> u64 {
        let s = self.seq;
        self.seq += 1;
        s
    }
}

#[derive(Debug)]
pub(super) struct Node {
    pub id: NodeId,
    pub keys: KeyPair,
    pub corrupt: bool,
    pub role: Role,
    pub committee: Option<u32>,
    pub claim: Option<SortitionClaim>,
    pub local_s: MemberList,
    pub proofs: BTreeMap<PublicKey, SortitionClaim>,
    pub told: BTreeSet<NodeId>,
    pub acks: Vec<ClaimAck>,
    /// Current leader of every committee as far as this node knows.
    pub leaders: Vec<(NodeId, PublicKey)>,
    pub epoch: u32,
    pub notices: BTreeMap<(u32, NodeId), BTreeMap<NodeId, NewLeaderNotice>>,
    pub collector: CommitmentCollector,
    pub leader_list: Option<SignedMemberList>,
    pub list_checked: bool,
    /// Roster of the own committee and the leader whose list defined it.
    pub roster: Option<(NodeId, Roster)>,
    pub pending_tx: Option<SignedTxList>,
    pub tx_list: Option<SignedTxList>,
    pub my_vote: Option<VoteVector>,
    pub intra: Option<InstanceId>,
    pub instances: BTreeMap<InstanceId, (Phase, ConsensusInstance<SimPayload>)>,
    pub wakes: BTreeSet<(InstanceId, u64)>,
    pub accept_seen: BTreeSet<Digest>,
    pub fallback: BTreeMap<Digest, SignedForward>,
    pub forwards_seen: BTreeSet<Digest>,
    pub accused: BTreeSet<NodeId>,
    pub voted: BTreeSet<Digest>,
    pub prosecutions: BTreeMap<Digest, Prosecution>,
    pub lead: Option<Lead>,
    pub referee: Option<Referee>,
}

impl Node {
    pub fn new(id: NodeId, keys: KeyPair) -> Self {
        Node {
            id,
            keys,
            corrupt: false,
            role: Role::Idle,
            committee: None,
            claim: None,
            local_s: MemberList::new(),
            proofs: BTreeMap::new(),
            told: BTreeSet::new(),
            acks: Vec::new(),
            leaders: Vec::new(),
            epoch: 0,
            notices: BTreeMap::new(),
            collector: CommitmentCollector::default(),
            leader_list: None,
            list_checked: false,
            roster: None,
            pending_tx: None,
            tx_list: None,
            my_vote: None,
            intra: None,
            instances: BTreeMap::new(),
            wakes: BTreeSet::new(),
            accept_seen: BTreeSet::new(),
            fallback: BTreeMap::new(),
            forwards_seen: BTreeSet::new(),
            accused: BTreeSet::new(),
            voted: BTreeSet::new(),
            prosecutions: BTreeMap::new(),
            lead: None,
            referee: None,
        }
    }

    /// Clears everything learned in the previous round.
    pub fn reset(&mut self, role: Role, committee: Option<u32>, corrupt: bool, leaders: Vec<(NodeId, PublicKey)>) {
        let (id, keys) = (self.id, self.keys);
        *self = Node::new(id, keys);
        self.role = role;
        self.committee = committee;
        self.corrupt = corrupt;
        self.leaders = leaders;
    }

    /// Everyone this node believes belongs to its committee, except itself.
    pub fn committee_peers(&self) -> Vec<NodeId> {
        let mut ids: BTreeSet<NodeId> = self.local_s.addresses().into_iter().collect();
        if let Some((_, r)) = &self.roster {
            ids.extend(r.ids());
        }
        ids.remove(&self.id);
        ids.into_iter().collect()
    }
}
