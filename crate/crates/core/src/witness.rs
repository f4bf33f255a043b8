//! Evidence of leader misbehaviour.
//!
//! Every piece of evidence carries at least one message signed by the accused
//! leader. Validation checks that signature first, so nobody can build a valid
//! witness against a leader who followed the protocol.

use crate::committee::{AgreedCommitment, ClaimAck, SignedMemberList};
use crate::consensus::{detect_equivocation, ProposeHeader, Roster};
use crate::crypto::{CryptoProvider, Digest, PublicKey};
use crate::ledger::SignedForward;
use crate::net::NodeId;

#[derive(Clone, Debug)]
pub enum Evidence {
    /// Two PROPOSE headers for one (round, seq) with different digests.
    Equivocation {
        first: ProposeHeader,
        second: ProposeHeader,
    },
    /// The member list the leader signed does not hash to the digest the
    /// referee committee agreed on for that leader.
    CommitmentMismatch {
        list: SignedMemberList,
        agreed: AgreedCommitment,
    },
    /// The leader acknowledged a member's claim but left it out of the list.
    MemberOmission { list: SignedMemberList, ack: ClaimAck },
    /// A cross-shard forward whose certificate does not back its list under
    /// the source committee's agreed member list.
    CrossShardForgery {
        forward: SignedForward,
        source: AgreedCommitment,
    },
}

impl Evidence {
    pub fn kind(&self) -> &'static str {
        match self {
            Evidence::Equivocation { .. } => "equivocation",
            Evidence::CommitmentMismatch { .. } => "commitment-mismatch",
            Evidence::MemberOmission { .. } => "member-omission",
            Evidence::CrossShardForgery { .. } => "cross-shard-forgery",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Witness {
    pub accused: NodeId,
    pub evidence: Evidence,
}

impl Witness {
    /// Checks the evidence against the accused leader's key. `referee` is the
    /// roster whose signatures make an [`AgreedCommitment`] binding.
    pub fn verify(&self, crypto: &dyn CryptoProvider, leader_key: &PublicKey, round: u64, referee: &Roster) -> bool {
        match &self.evidence {
            Evidence::Equivocation { first, second } => {
                first.id.leader == self.accused
                    && first.id.round == round
                    && detect_equivocation(first, second, crypto, leader_key).is_some()
            }
            Evidence::CommitmentMismatch { list, agreed } => {
                list.verify(crypto, leader_key)
                    && list.round == round
                    && agreed.round == round
                    && agreed.committee == list.committee
                    && agreed.leader == *leader_key
                    && agreed.verify(crypto, referee)
                    && list.members.digest() != agreed.digest
            }
            Evidence::MemberOmission { list, ack } => {
                list.verify(crypto, leader_key)
                    && ack.verify(crypto, leader_key)
                    && list.round == round
                    && ack.round == round
                    && ack.committee == list.committee
                    && !list.members.contains_key(&ack.member)
            }
            Evidence::CrossShardForgery { forward, source } => {
                forward.verify_signature(crypto, leader_key)
                    && forward.round == round
                    && source.round == round
                    && source.committee == forward.source
                    && source.leader == *leader_key
                    && source.verify(crypto, referee)
                    && !forward.backed_by(crypto, &source.digest)
            }
        }
    }

    /// Digest identifying this witness inside impeachment votes.
    pub fn digest(&self) -> Digest {
        let mut e = crate::codec::Encoder::new("witness");
        e.u32(self.accused.0).bytes(self.evidence.kind().as_bytes());
        match &self.evidence {
            Evidence::Equivocation { first, second } => {
                e.digest(&first.digest)
                    .sig(&first.sig)
                    .digest(&second.digest)
                    .sig(&second.sig);
            }
            Evidence::CommitmentMismatch { list, agreed } => {
                e.sig(&list.sig).digest(&agreed.digest);
            }
            Evidence::MemberOmission { list, ack } => {
                e.sig(&list.sig).sig(&ack.sig);
            }
            Evidence::CrossShardForgery { forward, source } => {
                e.sig(&forward.sig).digest(&source.digest);
            }
        }
        crate::crypto::hash(&e.into_bytes())
    }
}
