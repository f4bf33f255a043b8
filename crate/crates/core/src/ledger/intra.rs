//! Intra-committee transaction agreement.
//!
//! The leader signs a TX_LIST, members answer with signed vote vectors, and
//! the leader proposes (TXdecSET, VList, ScoreList) to the committee. Members
//! recompute the tally and scores from the signed votes before echoing, so a
//! leader cannot misreport the outcome.

use std::collections::BTreeMap;

use crate::codec::Encoder;
use crate::consensus::{Certificate, Proposal, Roster, VoteKind};
use crate::crypto::{hash, CryptoProvider, Digest, PublicKey, SecretKey, Signature};
use crate::net::NodeId;
use crate::reputation::{decision_vector, score, Vote};

use super::tx::Transaction;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TxList {
    pub committee: u32,
    pub round: u64,
    /// Distinguishes lists of successive leaders in one round.
    pub epoch: u32,
    pub txs: Vec<Transaction>,
}

impl TxList {
    pub fn digest(&self) -> Digest {
        let mut e = Encoder::new("TX_LIST");
        e.u32(self.committee)
            .u64(self.round)
            .u32(self.epoch)
            .len(self.txs.len());
        for t in &self.txs {
            t.encode_into(&mut e);
        }
        hash(&e.into_bytes())
    }
}

#[derive(Clone, Debug)]
pub struct SignedTxList {
    pub list: TxList,
    pub sig: Signature,
}

impl SignedTxList {
    pub fn sign(list: TxList, crypto: &dyn CryptoProvider, secret: &SecretKey) -> Self {
        let sig = crypto.sign(secret, &list.digest().0);
        SignedTxList { list, sig }
    }

    pub fn verify(&self, crypto: &dyn CryptoProvider, leader_key: &PublicKey) -> bool {
        crypto.verify(leader_key, &self.list.digest().0, &self.sig)
    }
}

/// A member's signed opinion on every transaction of a list.
#[derive(Clone, Debug, PartialEq)]
pub struct VoteVector {
    pub voter: NodeId,
    pub list: Digest,
    pub entries: Vec<Vote>,
    pub sig: Signature,
}

impl VoteVector {
    fn signing_bytes(voter: NodeId, list: &Digest, entries: &[Vote]) -> Vec<u8> {
        let mut e = Encoder::new("VOTE");
        e.u32(voter.0).digest(list).len(entries.len());
        for v in entries {
            e.i8(v.value());
        }
        e.into_bytes()
    }

    pub fn sign(
        voter: NodeId,
        list: Digest,
        entries: Vec<Vote>,
        crypto: &dyn CryptoProvider,
        secret: &SecretKey,
    ) -> Self {
        let sig = crypto.sign(secret, &Self::signing_bytes(voter, &list, &entries));
        VoteVector {
            voter,
            list,
            entries,
            sig,
        }
    }

    pub fn verify(&self, crypto: &dyn CryptoProvider, roster: &Roster) -> bool {
        roster.key(self.voter).is_some_and(|k| {
            crypto.verify(
                k,
                &Self::signing_bytes(self.voter, &self.list, &self.entries),
                &self.sig,
            )
        })
    }
}

/// (TXdecSET, VList, ScoreList) as agreed by the committee.
#[derive(Clone, Debug, PartialEq)]
pub struct IntraPayload {
    pub committee: u32,
    pub round: u64,
    pub list: Digest,
    /// `decided[k]` is true when tx k is in TXdecSET.
    pub decided: Vec<bool>,
    /// Votes received in time, ordered by voter. Absent members voted
    /// Unknown on everything.
    pub votes: Vec<VoteVector>,
    /// One score per roster member, ordered by node id.
    pub scores: Vec<(NodeId, f64)>,
}

impl Proposal for IntraPayload {
    fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::new("INTRA");
        e.u32(self.committee)
            .u64(self.round)
            .digest(&self.list)
            .len(self.decided.len());
        for d in &self.decided {
            e.u8(*d as u8);
        }
        e.len(self.votes.len());
        for v in &self.votes {
            e.u32(v.voter.0).sig(&v.sig);
        }
        e.len(self.scores.len());
        for (id, s) in &self.scores {
            e.u32(id.0).f64(*s);
        }
        e.into_bytes()
    }
}

/// Yes-counts per transaction over the given votes.
pub fn tally(len: usize, votes: &[VoteVector]) -> Vec<usize> {
    let mut yes = vec![0usize; len];
    for v in votes {
        for (k, e) in v.entries.iter().enumerate().take(len) {
            if *e == Vote::Yes {
                yes[k] += 1;
            }
        }
    }
    yes
}

/// Leader side: decide, score and package. Votes with bad signatures, wrong
/// list digests or wrong dimensions are dropped first.
pub fn build_intra_payload(
    list: &TxList,
    votes: &BTreeMap<NodeId, VoteVector>,
    roster: &Roster,
    crypto: &dyn CryptoProvider,
) -> IntraPayload {
    let digest = list.digest();
    let n = list.txs.len();
    let valid: Vec<VoteVector> = votes
        .values()
        .filter(|v| v.list == digest && v.entries.len() == n && v.verify(crypto, roster))
        .cloned()
        .collect();
    let yes = tally(n, &valid);
    let u = decision_vector(&yes, roster.size());
    let by_voter: BTreeMap<NodeId, &VoteVector> = valid.iter().map(|v| (v.voter, v)).collect();
    let scores = roster
        .ids()
        .map(|id| {
            let s = match by_voter.get(&id) {
                Some(v) if n > 0 => score(&v.entries, &u).unwrap_or(0.0),
                _ => 0.0,
            };
            (id, s)
        })
        .collect();
    IntraPayload {
        committee: list.committee,
        round: list.round,
        list: digest,
        decided: u.iter().map(|&x| x > 0).collect(),
        votes: valid,
        scores,
    }
}

/// Member side: the payload must be exactly what [`build_intra_payload`]
/// yields from the signed votes it carries, and must not misstate the
/// member's own vote.
pub fn check_intra_payload(
    payload: &IntraPayload,
    list: &TxList,
    roster: &Roster,
    crypto: &dyn CryptoProvider,
    own: Option<&VoteVector>,
) -> bool {
    if payload.list != list.digest() || payload.committee != list.committee || payload.round != list.round {
        return false;
    }
    let mut votes = BTreeMap::new();
    for v in &payload.votes {
        if votes.insert(v.voter, v.clone()).is_some() {
            return false;
        }
    }
    if let Some(mine) = own {
        if let Some(listed) = votes.get(&mine.voter) {
            if listed.entries != mine.entries {
                return false;
            }
        }
    }
    let rebuilt = build_intra_payload(list, &votes, roster, crypto);
    rebuilt.votes.len() == payload.votes.len() && rebuilt.digest() == payload.digest()
}

/// Certified outcome a leader reports to the referee committee.
#[derive(Clone, Debug)]
pub struct TxDecision {
    pub list: SignedTxList,
    pub payload: IntraPayload,
    pub cert: Certificate,
}

impl TxDecision {
    pub fn decided_txs(&self) -> impl Iterator<Item = &Transaction> {
        self.list
            .list
            .txs
            .iter()
            .zip(&self.payload.decided)
            .filter(|(_, d)| **d)
            .map(|(t, _)| t)
    }

    /// Every decided tx has a Yes majority, the votes back the payload, and
    /// the payload is certified by confirms of the committee roster.
    pub fn verify(&self, crypto: &dyn CryptoProvider, roster: &Roster, leader_key: &PublicKey) -> bool {
        self.list.verify(crypto, leader_key)
            && self.cert.digest == self.payload.digest()
            && self.cert.votes.iter().all(|v| v.kind == VoteKind::Confirm)
            && self.cert.verify(crypto, roster)
            && check_intra_payload(&self.payload, &self.list.list, roster, crypto, None)
    }

    pub fn units(&self) -> usize {
        self.list.list.txs.len() + self.cert.votes.len()
    }
}
