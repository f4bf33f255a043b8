//! Inside-committee agreement: PROPOSE → ECHO → CONFIRM.
//!
//! One [`ConsensusInstance`] exists per (leader, round, seq) at every committee
//! member. The instance is a pure state machine: handlers take the current
//! tick and return [`Action`]s for the caller to put on the wire.
//!
//! Quorums are strictly more than half of the full roster. A member confirms
//! only after holding a leader-signed header for at least Δ ticks, so that of
//! any two honest members holding conflicting headers at least one sees the
//! other's relayed header before it confirms.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::crypto::{hash, CryptoProvider, Digest, PublicKey, SecretKey, Signature};
use crate::net::{NodeId, Tick};
use crate::witness::{Evidence, Witness};

/// Anything a committee can agree on.
pub trait Proposal: Clone {
    /// Canonical encoding; the proposal digest is the hash of these bytes.
    fn encode(&self) -> Vec<u8>;

    fn digest(&self) -> Digest {
        hash(&self.encode())
    }
}

impl Proposal for Vec<u8> {
    fn encode(&self) -> Vec<u8> {
        self.clone()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstanceId {
    pub leader: NodeId,
    pub round: u64,
    pub seq: u64,
}

impl InstanceId {
    fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.leader.0.to_be_bytes());
        out.extend_from_slice(&self.round.to_be_bytes());
        out.extend_from_slice(&self.seq.to_be_bytes());
    }
}

/// Members of a committee with their public keys, ordered by node id.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Roster {
    members: BTreeMap<NodeId, PublicKey>,
}

impl Roster {
    pub fn new(members: impl IntoIterator<Item = (NodeId, PublicKey)>) -> Self {
        Roster {
            members: members.into_iter().collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Smallest count strictly greater than half the roster.
    pub fn quorum(&self) -> usize {
        self.members.len() / 2 + 1
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.members.contains_key(&id)
    }

    pub fn key(&self, id: NodeId) -> Option<&PublicKey> {
        self.members.get(&id)
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.members.keys().copied()
    }

    pub fn others(&self, me: NodeId) -> Vec<NodeId> {
        self.ids().filter(|&id| id != me).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProposeHeader {
    pub id: InstanceId,
    pub digest: Digest,
    pub sig: Signature,
}

impl ProposeHeader {
    pub fn signing_bytes(id: &InstanceId, digest: &Digest) -> Vec<u8> {
        let mut out = b"PROPOSE".to_vec();
        id.write(&mut out);
        out.extend_from_slice(&digest.0);
        out
    }

    pub fn sign(id: InstanceId, digest: Digest, crypto: &dyn CryptoProvider, secret: &SecretKey) -> Self {
        let sig = crypto.sign(secret, &Self::signing_bytes(&id, &digest));
        ProposeHeader { id, digest, sig }
    }

    pub fn verify(&self, crypto: &dyn CryptoProvider, leader_key: &PublicKey) -> bool {
        crypto.verify(leader_key, &Self::signing_bytes(&self.id, &self.digest), &self.sig)
    }
}

#[derive(Clone, Debug)]
pub struct ProposeMsg<P> {
    pub header: ProposeHeader,
    pub payload: P,
}

impl<P: Proposal> ProposeMsg<P> {
    pub fn new(id: InstanceId, payload: P, crypto: &dyn CryptoProvider, secret: &SecretKey) -> Self {
        let header = ProposeHeader::sign(id, payload.digest(), crypto, secret);
        ProposeMsg { header, payload }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VoteKind {
    Echo,
    Confirm,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedVote {
    pub kind: VoteKind,
    pub id: InstanceId,
    pub digest: Digest,
    pub voter: NodeId,
    pub sig: Signature,
}

impl SignedVote {
    pub fn signing_bytes(kind: VoteKind, id: &InstanceId, digest: &Digest, voter: NodeId) -> Vec<u8> {
        let mut out = match kind {
            VoteKind::Echo => b"ECHO".to_vec(),
            VoteKind::Confirm => b"CONFIRM".to_vec(),
        };
        id.write(&mut out);
        out.extend_from_slice(&digest.0);
        out.extend_from_slice(&voter.0.to_be_bytes());
        out
    }

    pub fn sign(
        kind: VoteKind,
        id: InstanceId,
        digest: Digest,
        voter: NodeId,
        crypto: &dyn CryptoProvider,
        secret: &SecretKey,
    ) -> Self {
        let sig = crypto.sign(secret, &Self::signing_bytes(kind, &id, &digest, voter));
        SignedVote {
            kind,
            id,
            digest,
            voter,
            sig,
        }
    }

    pub fn verify(&self, crypto: &dyn CryptoProvider, roster: &Roster) -> bool {
        match roster.key(self.voter) {
            Some(key) => crypto.verify(
                key,
                &Self::signing_bytes(self.kind, &self.id, &self.digest, self.voter),
                &self.sig,
            ),
            None => false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EchoMsg {
    pub vote: SignedVote,
    /// The leader-signed header the voter is echoing.
    pub relay: ProposeHeader,
}

#[derive(Clone, Debug)]
pub struct ConfirmMsg {
    pub vote: SignedVote,
    pub echoes: Vec<SignedVote>,
}

#[derive(Clone, Debug)]
pub enum ConsensusMsg<P> {
    Propose(ProposeMsg<P>),
    Echo(EchoMsg),
    Confirm(ConfirmMsg),
}

impl<P> ConsensusMsg<P> {
    pub fn instance(&self) -> InstanceId {
        match self {
            ConsensusMsg::Propose(m) => m.header.id,
            ConsensusMsg::Echo(m) => m.vote.id,
            ConsensusMsg::Confirm(m) => m.vote.id,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            ConsensusMsg::Propose(_) => "PROPOSE",
            ConsensusMsg::Echo(_) => "ECHO",
            ConsensusMsg::Confirm(_) => "CONFIRM",
        }
    }
}

/// A set of signed votes from more than half of a roster on one digest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub id: InstanceId,
    pub digest: Digest,
    pub votes: Vec<SignedVote>,
}

impl Certificate {
    /// Accepts echo or confirm votes; duplicates and foreign voters do not
    /// count towards the quorum.
    pub fn verify(&self, crypto: &dyn CryptoProvider, roster: &Roster) -> bool {
        let mut voters = std::collections::BTreeSet::new();
        for vote in &self.votes {
            if vote.id != self.id || vote.digest != self.digest || !vote.verify(crypto, roster) {
                return false;
            }
            voters.insert(vote.voter);
        }
        voters.len() >= roster.quorum()
    }
}

#[derive(Clone, Debug)]
pub struct ConsensusResult<P> {
    pub id: InstanceId,
    pub payload: P,
    pub digest: Digest,
    pub sig_list: Vec<SignedVote>,
}

impl<P: Proposal> ConsensusResult<P> {
    pub fn certificate(&self) -> Certificate {
        Certificate {
            id: self.id,
            digest: self.digest,
            votes: self.sig_list.clone(),
        }
    }

    /// Checks that the result is a genuine agreement of `roster` on `payload`.
    pub fn verify(&self, crypto: &dyn CryptoProvider, roster: &Roster) -> bool {
        self.payload.digest() == self.digest
            && self.sig_list.iter().all(|v| v.kind == VoteKind::Confirm)
            && self.certificate().verify(crypto, roster)
    }
}

#[derive(Clone, Debug)]
pub enum Action<P> {
    /// Send to every roster member other than the sender.
    Broadcast(ConsensusMsg<P>),
    Send(NodeId, ConsensusMsg<P>),
    Decided(ConsensusResult<P>),
    Witness(Witness),
    NoQuorum(InstanceId),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConsensusError {
    #[error("sequence number already used by this leader in this round")]
    DuplicateSeq,
    #[error("payload digest does not match the proposal header")]
    BadDigest,
    #[error("message for a different round or instance")]
    StaleRound,
    #[error("only the instance leader may propose")]
    NotLeader,
    #[error("leader signature does not verify")]
    BadSignature,
}

/// Returns a witness iff both headers verify under the leader's key, share
/// (leader, round, seq) and differ in digest.
pub fn detect_equivocation(
    a: &ProposeHeader,
    b: &ProposeHeader,
    crypto: &dyn CryptoProvider,
    leader_key: &PublicKey,
) -> Option<Witness> {
    if !a.verify(crypto, leader_key) || !b.verify(crypto, leader_key) {
        return None;
    }
    if a.id != b.id || a.digest == b.digest {
        return None;
    }
    Some(Witness {
        accused: a.id.leader,
        evidence: Evidence::Equivocation {
            first: a.clone(),
            second: b.clone(),
        },
    })
}

#[derive(Clone, Debug)]
pub struct ConsensusInstance<P> {
    id: InstanceId,
    me: NodeId,
    roster: Roster,
    leader_key: PublicKey,
    hold_back: Tick,
    timeout: Tick,
    started_at: Tick,
    header: Option<ProposeHeader>,
    header_seen_at: Tick,
    payload: Option<P>,
    endorsed: Option<bool>,
    echoed: bool,
    echoes: BTreeMap<Digest, BTreeMap<NodeId, SignedVote>>,
    confirmed: bool,
    confirms: BTreeMap<NodeId, SignedVote>,
    decided: bool,
    gave_up: bool,
    equivocation: Option<Witness>,
    discarded: u64,
}

impl<P: Proposal> ConsensusInstance<P> {
    /// `hold_back` is Δ; `timeout` is the leader's give-up window (6Δ).
    pub fn new(
        id: InstanceId,
        me: NodeId,
        roster: Roster,
        leader_key: PublicKey,
        now: Tick,
        hold_back: Tick,
        timeout: Tick,
    ) -> Self {
        ConsensusInstance {
            id,
            me,
            roster,
            leader_key,
            hold_back,
            timeout,
            started_at: now,
            header: None,
            header_seen_at: 0,
            payload: None,
            endorsed: None,
            echoed: false,
            echoes: BTreeMap::new(),
            confirmed: false,
            confirms: BTreeMap::new(),
            decided: false,
            gave_up: false,
            equivocation: None,
            discarded: 0,
        }
    }

    pub fn id(&self) -> InstanceId {
        self.id
    }

    pub fn roster(&self) -> &Roster {
        &self.roster
    }

    pub fn is_leader(&self) -> bool {
        self.me == self.id.leader
    }

    pub fn is_decided(&self) -> bool {
        self.decided
    }

    pub fn has_confirmed(&self) -> bool {
        self.confirmed
    }

    pub fn header(&self) -> Option<&ProposeHeader> {
        self.header.as_ref()
    }

    pub fn payload(&self) -> Option<&P> {
        self.payload.as_ref()
    }

    pub fn equivocation(&self) -> Option<&Witness> {
        self.equivocation.as_ref()
    }

    /// Messages rejected because of bad signatures or foreign voters.
    pub fn discarded(&self) -> u64 {
        self.discarded
    }

    /// Signed echoes held for the adopted digest; more than half of the
    /// roster makes them a [`Certificate`].
    pub fn echo_certificate(&self) -> Option<Certificate> {
        let header = self.header.as_ref()?;
        let votes: Vec<SignedVote> = self.echoes.get(&header.digest)?.values().cloned().collect();
        (votes.len() >= self.roster.quorum()).then_some(Certificate {
            id: self.id,
            digest: header.digest,
            votes,
        })
    }

    /// Next tick at which [`poll`](Self::poll) may produce an action.
    /// Earliest time after `now` at which [`poll`](Self::poll) may act.
    pub fn wake_at(&self, now: Tick) -> Option<Tick> {
        if self.equivocation.is_some() {
            return None;
        }
        let mut candidates = Vec::with_capacity(2);
        if self.header.is_some() && !self.confirmed {
            candidates.push(self.header_seen_at + self.hold_back);
        }
        if self.is_leader() && !self.decided && !self.gave_up {
            candidates.push(self.started_at + self.timeout);
        }
        candidates.into_iter().filter(|&t| t > now).min()
    }

    pub fn leader_propose(
        &mut self,
        payload: P,
        now: Tick,
        crypto: &dyn CryptoProvider,
        secret: &SecretKey,
    ) -> Result<Vec<Action<P>>, ConsensusError> {
        if !self.is_leader() {
            return Err(ConsensusError::NotLeader);
        }
        if self.header.is_some() {
            return Err(ConsensusError::DuplicateSeq);
        }
        self.started_at = now;
        let msg = ProposeMsg::new(self.id, payload, crypto, secret);
        let mut actions = vec![Action::Broadcast(ConsensusMsg::Propose(msg.clone()))];
        actions.extend(self.on_propose(msg, now, crypto, secret, |_| true)?);
        Ok(actions)
    }

    pub fn on_propose(
        &mut self,
        msg: ProposeMsg<P>,
        now: Tick,
        crypto: &dyn CryptoProvider,
        secret: &SecretKey,
        validate: impl FnOnce(&P) -> bool,
    ) -> Result<Vec<Action<P>>, ConsensusError> {
        if msg.header.id != self.id {
            return Err(ConsensusError::StaleRound);
        }
        if !msg.header.verify(crypto, &self.leader_key) {
            self.discarded += 1;
            return Err(ConsensusError::BadSignature);
        }
        if msg.payload.digest() != msg.header.digest {
            return Err(ConsensusError::BadDigest);
        }
        if let Some(w) = self.check_conflict(&msg.header, crypto) {
            return Ok(vec![Action::Witness(w)]);
        }
        if self.equivocation.is_some() || self.payload.is_some() {
            return Ok(Vec::new());
        }
        self.adopt_header(msg.header.clone(), now);
        let endorsed = validate(&msg.payload);
        self.payload = Some(msg.payload);
        self.endorsed = Some(endorsed);
        let mut actions = Vec::new();
        if endorsed && !self.echoed {
            self.echoed = true;
            let vote = SignedVote::sign(VoteKind::Echo, self.id, msg.header.digest, self.me, crypto, secret);
            self.echoes
                .entry(vote.digest)
                .or_default()
                .insert(self.me, vote.clone());
            actions.push(Action::Broadcast(ConsensusMsg::Echo(EchoMsg {
                vote,
                relay: msg.header,
            })));
        }
        actions.extend(self.poll(now, crypto, secret));
        Ok(actions)
    }

    pub fn on_echo(
        &mut self,
        msg: EchoMsg,
        now: Tick,
        crypto: &dyn CryptoProvider,
        secret: &SecretKey,
    ) -> Vec<Action<P>> {
        let vote = &msg.vote;
        if vote.id != self.id
            || vote.kind != VoteKind::Echo
            || msg.relay.id != self.id
            || msg.relay.digest != vote.digest
            || !vote.verify(crypto, &self.roster)
            || !msg.relay.verify(crypto, &self.leader_key)
        {
            self.discarded += 1;
            return Vec::new();
        }
        if let Some(w) = self.check_conflict(&msg.relay, crypto) {
            return vec![Action::Witness(w)];
        }
        if self.equivocation.is_some() {
            return Vec::new();
        }
        if self.header.is_none() {
            self.adopt_header(msg.relay.clone(), now);
        }
        self.echoes.entry(vote.digest).or_default().insert(vote.voter, msg.vote);
        self.poll(now, crypto, secret)
    }

    pub fn on_confirm(&mut self, msg: ConfirmMsg, now: Tick, crypto: &dyn CryptoProvider) -> Vec<Action<P>> {
        let _ = now;
        let Some(header) = self.header.as_ref() else {
            self.discarded += 1;
            return Vec::new();
        };
        let vote = &msg.vote;
        if !self.is_leader()
            || vote.id != self.id
            || vote.kind != VoteKind::Confirm
            || vote.digest != header.digest
            || !vote.verify(crypto, &self.roster)
        {
            self.discarded += 1;
            return Vec::new();
        }
        let echo_cert = Certificate {
            id: self.id,
            digest: header.digest,
            votes: msg.echoes.clone(),
        };
        if !msg.echoes.iter().all(|e| e.kind == VoteKind::Echo) || !echo_cert.verify(crypto, &self.roster) {
            self.discarded += 1;
            return Vec::new();
        }
        self.confirms.insert(vote.voter, msg.vote);
        self.try_decide()
    }

    /// Time-driven transitions: the delayed CONFIRM and the leader timeout.
    pub fn poll(&mut self, now: Tick, crypto: &dyn CryptoProvider, secret: &SecretKey) -> Vec<Action<P>> {
        let mut actions = Vec::new();
        if self.equivocation.is_some() {
            return actions;
        }
        if let Some(confirm) = self.maybe_confirm(now, crypto, secret) {
            if self.is_leader() {
                self.confirms.insert(self.me, confirm.vote);
                actions.extend(self.try_decide());
            } else {
                actions.push(Action::Send(self.id.leader, ConsensusMsg::Confirm(confirm)));
            }
        }
        if self.is_leader() && !self.decided && !self.gave_up && now >= self.started_at + self.timeout {
            self.gave_up = true;
            actions.push(Action::NoQuorum(self.id));
        }
        actions
    }

    fn maybe_confirm(&mut self, now: Tick, crypto: &dyn CryptoProvider, secret: &SecretKey) -> Option<ConfirmMsg> {
        if self.confirmed || self.endorsed == Some(false) {
            return None;
        }
        let header = self.header.as_ref()?;
        if now < self.header_seen_at + self.hold_back {
            return None;
        }
        let echoes = self.echoes.get(&header.digest)?;
        if echoes.len() < self.roster.quorum() {
            return None;
        }
        self.confirmed = true;
        let vote = SignedVote::sign(VoteKind::Confirm, self.id, header.digest, self.me, crypto, secret);
        Some(ConfirmMsg {
            vote,
            echoes: echoes.values().cloned().collect(),
        })
    }

    fn try_decide(&mut self) -> Vec<Action<P>> {
        if self.decided || self.confirms.len() < self.roster.quorum() {
            return Vec::new();
        }
        let (Some(header), Some(payload)) = (self.header.as_ref(), self.payload.as_ref()) else {
            return Vec::new();
        };
        self.decided = true;
        vec![Action::Decided(ConsensusResult {
            id: self.id,
            payload: payload.clone(),
            digest: header.digest,
            sig_list: self.confirms.values().cloned().collect(),
        })]
    }

    fn adopt_header(&mut self, header: ProposeHeader, now: Tick) {
        self.header = Some(header);
        self.header_seen_at = now;
    }

    fn check_conflict(&mut self, incoming: &ProposeHeader, crypto: &dyn CryptoProvider) -> Option<Witness> {
        if self.equivocation.is_some() {
            return None;
        }
        let held = self.header.as_ref()?;
        let w = detect_equivocation(held, incoming, crypto, &self.leader_key)?;
        self.equivocation = Some(w.clone());
        Some(w)
    }
}
