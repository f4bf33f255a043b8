//! Wire messages of the simulated protocol.

use crate::codec::Encoder;
use crate::committee::{
    Accusation, AgreedCommitment, ClaimAck, CommitmentAck, ImpeachVote, NewLeaderNotice, PowTicket, Prosecution,
    Replacement, SignedMemberList, SortitionClaim,
};
use crate::consensus::{Certificate, ConsensusMsg, ConsensusResult, Proposal};
use crate::crypto::{Digest, PublicKey};
use crate::ledger::VoteVector;
use crate::ledger::{
    Block, CrossAccept, CrossList, CrossResult, IntraPayload, SignedForward, SignedTxList, TxDecision,
};
use crate::net::{NodeId, Payload};
use crate::witness::Witness;

/// Protocol phase a message belongs to, used for complexity accounting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Registration,
    Config,
    Commitment,
    Intra,
    Cross,
    Recovery,
    Block,
}

impl Phase {
    pub const ALL: [Phase; 7] = [
        Phase::Registration,
        Phase::Config,
        Phase::Commitment,
        Phase::Intra,
        Phase::Cross,
        Phase::Recovery,
        Phase::Block,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Phase::Registration => "registration",
            Phase::Config => "config",
            Phase::Commitment => "commitment",
            Phase::Intra => "intra",
            Phase::Cross => "cross",
            Phase::Recovery => "recovery",
            Phase::Block => "block",
        }
    }
}

/// One row of the referee's commitment table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableEntry {
    pub committee: u32,
    pub leader: NodeId,
    pub leader_key: PublicKey,
    pub digest: Digest,
    pub valid: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommitmentTable {
    pub round: u64,
    pub entries: Vec<TableEntry>,
}

impl Proposal for CommitmentTable {
    fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::new("COMMIT_TABLE");
        e.u64(self.round).len(self.entries.len());
        for x in &self.entries {
            e.u32(x.committee)
                .u32(x.leader.0)
                .key(&x.leader_key)
                .digest(&x.digest)
                .u8(x.valid as u8);
        }
        e.into_bytes()
    }
}

/// A replacement together with the prosecution that justifies it.
#[derive(Clone, Debug)]
pub struct ReplaceProposal {
    pub replacement: Replacement,
    pub prosecution: Prosecution,
}

impl Proposal for ReplaceProposal {
    fn encode(&self) -> Vec<u8> {
        let a = &self.prosecution.accusation;
        let mut e = Encoder::new("REPLACE");
        e.bytes(&self.replacement.encode())
            .digest(&a.witness.digest())
            .sig(&a.sig)
            .len(self.prosecution.votes.len());
        for v in &self.prosecution.votes {
            e.u32(v.voter.0).sig(&v.sig);
        }
        e.into_bytes()
    }
}

/// Material a referee member needs to re-derive a proposed block.
#[derive(Clone, Debug, Default)]
pub struct BlockEvidence {
    pub decisions: Vec<(NodeId, TxDecision)>,
    pub cross: Vec<CrossResult>,
    pub tickets: Vec<(NodeId, PowTicket)>,
    pub reveals: Vec<(NodeId, Digest)>,
    /// Leaders evicted this round, by committee.
    pub evicted: Vec<(u32, NodeId)>,
}

#[derive(Clone, Debug)]
pub struct BlockProposal {
    pub block: Block,
    pub evidence: BlockEvidence,
}

impl Proposal for BlockProposal {
    fn encode(&self) -> Vec<u8> {
        let ev = &self.evidence;
        let mut e = Encoder::new("BLOCK_PROPOSAL");
        e.digest(&self.block.digest()).len(ev.decisions.len());
        for (l, d) in &ev.decisions {
            e.u32(l.0).digest(&d.list.list.digest()).digest(&d.payload.digest());
        }
        e.len(ev.cross.len());
        for c in &ev.cross {
            e.digest(&c.digest());
        }
        e.len(ev.tickets.len());
        for (id, t) in &ev.tickets {
            e.u32(id.0).key(&t.key).u64(t.round).u64(t.nonce);
        }
        e.len(ev.reveals.len());
        for (id, r) in &ev.reveals {
            e.u32(id.0).digest(r);
        }
        e.len(ev.evicted.len());
        for (k, id) in &ev.evicted {
            e.u32(*k).u32(id.0);
        }
        e.into_bytes()
    }
}

/// Everything any committee agrees on with the three-step protocol.
#[derive(Clone, Debug)]
pub enum SimPayload {
    Table(CommitmentTable),
    Intra(IntraPayload),
    Cross(CrossList),
    Accept(Box<CrossAccept>),
    Replace(Box<ReplaceProposal>),
    Block(Box<BlockProposal>),
}

/// Each inner encoding carries its own domain tag, so the wrapper encodes
/// transparently and certificates over a payload also certify the inner value.
impl Proposal for SimPayload {
    fn encode(&self) -> Vec<u8> {
        match self {
            SimPayload::Table(p) => p.encode(),
            SimPayload::Intra(p) => p.encode(),
            SimPayload::Cross(p) => p.encode(),
            SimPayload::Accept(p) => p.encode(),
            SimPayload::Replace(p) => p.encode(),
            SimPayload::Block(p) => p.encode(),
        }
    }
}

impl SimPayload {
    pub fn units(&self) -> usize {
        match self {
            SimPayload::Table(t) => t.entries.len().max(1),
            SimPayload::Intra(p) => p.decided.len() + p.votes.len(),
            SimPayload::Cross(l) => l.txs.len().max(1),
            SimPayload::Accept(a) => a.forward.units(),
            SimPayload::Replace(r) => 1 + r.prosecution.votes.len(),
            SimPayload::Block(b) => block_units(&b.block),
        }
    }
}

pub fn block_units(b: &Block) -> usize {
    1 + b.txs.len() + b.participants.len() + b.reputations.len()
}

#[derive(Clone, Debug)]
pub enum Msg {
    Register(PowTicket),
    BeaconCommit(Digest),
    BeaconReveal(Digest),
    Config(SortitionClaim),
    MemList(Vec<SortitionClaim>),
    Member(SortitionClaim),
    ClaimRelay(SortitionClaim),
    Ack(ClaimAck),
    SemiCom(Box<SignedMemberList>),
    CommitAck(CommitmentAck),
    FinalList(Box<SignedMemberList>, Box<AgreedCommitment>),
    Cons(Phase, Box<ConsensusMsg<SimPayload>>),
    Decided(Phase, Box<ConsensusResult<SimPayload>>),
    TxList(Box<SignedTxList>),
    Vote(Box<VoteVector>),
    Decision(Box<TxDecision>),
    Forward(Box<SignedForward>),
    CrossDone(Box<CrossResult>),
    WitnessFwd(Box<Witness>),
    Accuse(Box<Accusation>),
    Impeach(Digest, ImpeachVote),
    Prosecute(Box<Prosecution>),
    NewLeader(NewLeaderNotice),
    NewRelay(Vec<NewLeaderNotice>),
    BlockRelease(Box<Block>, Box<Certificate>),
}

impl Msg {
    pub fn phase(&self) -> Phase {
        match self {
            Msg::Register(_) => Phase::Registration,
            Msg::BeaconCommit(_) | Msg::BeaconReveal(_) | Msg::BlockRelease(..) => Phase::Block,
            Msg::Config(_) | Msg::MemList(_) | Msg::Member(_) | Msg::ClaimRelay(_) | Msg::Ack(_) => Phase::Config,
            Msg::SemiCom(_) | Msg::CommitAck(_) | Msg::FinalList(..) => Phase::Commitment,
            Msg::Cons(p, _) | Msg::Decided(p, _) => *p,
            Msg::TxList(_) | Msg::Vote(_) | Msg::Decision(_) => Phase::Intra,
            Msg::Forward(_) | Msg::CrossDone(_) => Phase::Cross,
            Msg::WitnessFwd(_)
            | Msg::Accuse(_)
            | Msg::Impeach(..)
            | Msg::Prosecute(_)
            | Msg::NewLeader(_)
            | Msg::NewRelay(_) => Phase::Recovery,
        }
    }
}

impl Payload for Msg {
    fn tag(&self) -> &'static str {
        match self {
            Msg::Register(_) => "REGISTER",
            Msg::BeaconCommit(_) => "BEACON_COMMIT",
            Msg::BeaconReveal(_) => "BEACON_REVEAL",
            Msg::Config(_) => "CONFIG",
            Msg::MemList(_) => "MEM_LIST",
            Msg::Member(_) => "MEMBER",
            Msg::ClaimRelay(_) => "CLAIM",
            Msg::Ack(_) => "CLAIM_ACK",
            Msg::SemiCom(_) => "SEMI_COM",
            Msg::CommitAck(_) => "SEMI_COM_ACK",
            Msg::FinalList(..) => "FINAL_LIST",
            Msg::Cons(_, c) => c.tag(),
            Msg::Decided(..) => "DECIDED",
            Msg::TxList(_) => "TX_LIST",
            Msg::Vote(_) => "VOTE",
            Msg::Decision(_) => "INTRA",
            Msg::Forward(_) => "CROSS_FORWARD",
            Msg::CrossDone(_) => "CROSS_RESULT",
            Msg::WitnessFwd(_) => "WITNESS",
            Msg::Accuse(_) => "ACCUSE",
            Msg::Impeach(..) => "IMPEACH",
            Msg::Prosecute(_) => "PROSECUTE",
            Msg::NewLeader(_) => "NEW",
            Msg::NewRelay(_) => "NEW_RELAY",
            Msg::BlockRelease(..) => "BLOCK",
        }
    }

    fn units(&self) -> usize {
        match self {
            Msg::MemList(v) => v.len().max(1),
            Msg::SemiCom(l) => l.members.len().max(1),
            Msg::FinalList(l, _) => l.members.len().max(1),
            Msg::Cons(_, c) => match c.as_ref() {
                ConsensusMsg::Propose(p) => p.payload.units(),
                ConsensusMsg::Echo(_) => 1,
                ConsensusMsg::Confirm(c) => 1 + c.echoes.len(),
            },
            Msg::Decided(_, r) => r.payload.units() + r.sig_list.len(),
            Msg::TxList(l) => l.list.txs.len().max(1),
            Msg::Vote(v) => v.entries.len().max(1),
            Msg::Decision(d) => d.units(),
            Msg::Forward(f) => f.units(),
            Msg::CrossDone(r) => r.accept.forward.units() + r.cert.votes.len(),
            Msg::Prosecute(p) => 1 + p.votes.len(),
            Msg::NewRelay(v) => v.len().max(1),
            Msg::BlockRelease(b, c) => block_units(b) + c.votes.len(),
            _ => 1,
        }
    }
}
