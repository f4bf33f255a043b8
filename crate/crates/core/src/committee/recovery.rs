//! Accusation, impeachment and leader replacement.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::codec::Encoder;
use crate::consensus::{Proposal, Roster};
use crate::crypto::{CryptoProvider, Digest, PublicKey, SecretKey, Signature};
use crate::net::NodeId;
use crate::witness::Witness;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RecoveryError {
    #[error("witness does not prove misbehaviour of the accused leader")]
    InvalidWitness,
    #[error("impeachment certificate lacks a committee majority")]
    InsufficientCert,
    #[error("prosecutor signature does not verify")]
    BadSignature,
    #[error("prosecutor is not a partial-set member of the committee")]
    NotPartialMember,
}

/// A partial member's signed charge against its leader.
#[derive(Clone, Debug)]
pub struct Accusation {
    pub committee: u32,
    pub round: u64,
    pub accused: NodeId,
    pub accused_key: PublicKey,
    pub witness: Witness,
    pub prosecutor: NodeId,
    pub prosecutor_key: PublicKey,
    pub sig: Signature,
}

impl Accusation {
    fn signing_bytes(committee: u32, round: u64, accused: NodeId, witness: &Digest, prosecutor: NodeId) -> Vec<u8> {
        let mut e = Encoder::new("ACCUSE");
        e.u32(committee)
            .u64(round)
            .u32(accused.0)
            .digest(witness)
            .u32(prosecutor.0);
        e.into_bytes()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn new(
        committee: u32,
        round: u64,
        accused: NodeId,
        accused_key: PublicKey,
        witness: Witness,
        prosecutor: NodeId,
        crypto: &dyn CryptoProvider,
        secret: &SecretKey,
    ) -> Self {
        let sig = crypto.sign(
            secret,
            &Self::signing_bytes(committee, round, accused, &witness.digest(), prosecutor),
        );
        Accusation {
            committee,
            round,
            accused,
            accused_key,
            witness,
            prosecutor,
            prosecutor_key: secret.public_key(),
            sig,
        }
    }

    pub fn verify_signature(&self, crypto: &dyn CryptoProvider) -> bool {
        crypto.verify(
            &self.prosecutor_key,
            &Self::signing_bytes(
                self.committee,
                self.round,
                self.accused,
                &self.witness.digest(),
                self.prosecutor,
            ),
            &self.sig,
        )
    }

    pub fn vote_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::new("IMPEACH");
        e.u32(self.committee)
            .u64(self.round)
            .u32(self.accused.0)
            .u32(self.prosecutor.0)
            .digest(&self.witness.digest());
        e.into_bytes()
    }

    /// A committee member's approval of this accusation.
    pub fn impeach(&self, voter: NodeId, crypto: &dyn CryptoProvider, secret: &SecretKey) -> ImpeachVote {
        ImpeachVote {
            voter,
            sig: crypto.sign(secret, &self.vote_bytes()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ImpeachVote {
    pub voter: NodeId,
    pub sig: Signature,
}

/// What the prosecutor forwards to the referee committee.
#[derive(Clone, Debug)]
pub struct Prosecution {
    pub accusation: Accusation,
    pub votes: Vec<ImpeachVote>,
}

impl Prosecution {
    /// Full check done by a referee member before it lets the replacement
    /// go through agreement.
    pub fn validate(
        &self,
        crypto: &dyn CryptoProvider,
        committee_roster: &Roster,
        referee_roster: &Roster,
        partial_set: &[NodeId],
        leader_key: &PublicKey,
    ) -> Result<(), RecoveryError> {
        let a = &self.accusation;
        if !a.verify_signature(crypto)
            || committee_roster
                .key(a.prosecutor)
                .is_some_and(|k| *k != a.prosecutor_key)
        {
            return Err(RecoveryError::BadSignature);
        }
        if !partial_set.contains(&a.prosecutor) {
            return Err(RecoveryError::NotPartialMember);
        }
        if a.witness.accused != a.accused
            || a.accused_key != *leader_key
            || !a.witness.verify(crypto, leader_key, a.round, referee_roster)
        {
            return Err(RecoveryError::InvalidWitness);
        }
        let bytes = a.vote_bytes();
        let mut voters = BTreeSet::new();
        for v in &self.votes {
            if let Some(k) = committee_roster.key(v.voter) {
                if crypto.verify(k, &bytes, &v.sig) {
                    voters.insert(v.voter);
                }
            }
        }
        if voters.len() < committee_roster.quorum() {
            return Err(RecoveryError::InsufficientCert);
        }
        Ok(())
    }
}

/// Payload the referee agrees on to replace a leader.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Replacement {
    pub committee: u32,
    pub round: u64,
    pub old_leader: NodeId,
    pub new_leader: NodeId,
    pub new_key: PublicKey,
}

impl Proposal for Replacement {
    fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::new("NEW");
        e.u32(self.committee)
            .u64(self.round)
            .u32(self.old_leader.0)
            .u32(self.new_leader.0)
            .key(&self.new_key);
        e.into_bytes()
    }
}

/// Referee-side decision for a prosecution: the prosecutor becomes leader.
pub fn reselect_leader(
    prosecution: &Prosecution,
    crypto: &dyn CryptoProvider,
    committee_roster: &Roster,
    referee_roster: &Roster,
    partial_set: &[NodeId],
    leader_key: &PublicKey,
) -> Result<Replacement, RecoveryError> {
    prosecution.validate(crypto, committee_roster, referee_roster, partial_set, leader_key)?;
    let a = &prosecution.accusation;
    Ok(Replacement {
        committee: a.committee,
        round: a.round,
        old_leader: a.accused,
        new_leader: a.prosecutor,
        new_key: a.prosecutor_key,
    })
}

/// One referee member's signed (NEW, pm) announcement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NewLeaderNotice {
    pub replacement: Replacement,
    pub referee: NodeId,
    pub sig: Signature,
}

impl NewLeaderNotice {
    pub fn sign(replacement: Replacement, referee: NodeId, crypto: &dyn CryptoProvider, secret: &SecretKey) -> Self {
        NewLeaderNotice {
            replacement,
            referee,
            sig: crypto.sign(secret, &replacement.encode()),
        }
    }

    pub fn verify(&self, crypto: &dyn CryptoProvider, referee: &Roster) -> bool {
        referee
            .key(self.referee)
            .is_some_and(|k| crypto.verify(k, &self.replacement.encode(), &self.sig))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::{InstanceId, ProposeHeader};
    use crate::crypto::{hash, KeyPair, SimCrypto};
    use crate::witness::Evidence;

    struct Fixture {
        crypto: SimCrypto,
        keys: Vec<KeyPair>,
        committee: Roster,
        referee: Roster,
    }

    fn fixture() -> Fixture {
        let mut crypto = SimCrypto::new(4);
        let keys: Vec<KeyPair> = (0..9)
            .map(|i| crypto.generate_keypair(format!("x{i}").as_bytes()))
            .collect();
        let committee = Roster::new((0..6).map(|i| (NodeId(i), keys[i as usize].public)));
        let referee = Roster::new((6..9).map(|i| (NodeId(i), keys[i as usize].public)));
        Fixture {
            crypto,
            keys,
            committee,
            referee,
        }
    }

    fn equivocation(f: &Fixture, signer: usize) -> Witness {
        let id = InstanceId {
            leader: NodeId(0),
            round: 2,
            seq: 1,
        };
        Witness {
            accused: NodeId(0),
            evidence: Evidence::Equivocation {
                first: ProposeHeader::sign(id, hash(b"a"), &f.crypto, &f.keys[signer].secret),
                second: ProposeHeader::sign(id, hash(b"b"), &f.crypto, &f.keys[signer].secret),
            },
        }
    }

    fn prosecution(f: &Fixture, witness: Witness, voters: usize) -> Prosecution {
        let acc = Accusation::new(
            0,
            2,
            NodeId(0),
            f.keys[0].public,
            witness,
            NodeId(1),
            &f.crypto,
            &f.keys[1].secret,
        );
        let votes = (1..=voters)
            .map(|i| acc.impeach(NodeId(i as u32), &f.crypto, &f.keys[i].secret))
            .collect();
        Prosecution { accusation: acc, votes }
    }

    #[test]
    fn valid_prosecution_replaces_leader() {
        let f = fixture();
        let p = prosecution(&f, equivocation(&f, 0), 4);
        let r = reselect_leader(&p, &f.crypto, &f.committee, &f.referee, &[NodeId(1)], &f.keys[0].public).unwrap();
        assert_eq!(r.new_leader, NodeId(1));
        assert_eq!(r.old_leader, NodeId(0));
    }

    #[test]
    fn fabricated_witness_is_discarded() {
        let f = fixture();
        // "Leader" headers actually signed by the prosecutor.
        let p = prosecution(&f, equivocation(&f, 1), 5);
        assert_eq!(
            reselect_leader(&p, &f.crypto, &f.committee, &f.referee, &[NodeId(1)], &f.keys[0].public).unwrap_err(),
            RecoveryError::InvalidWitness
        );
    }

    #[test]
    fn third_of_committee_is_not_enough() {
        let f = fixture();
        let p = prosecution(&f, equivocation(&f, 0), 2);
        assert_eq!(
            reselect_leader(&p, &f.crypto, &f.committee, &f.referee, &[NodeId(1)], &f.keys[0].public).unwrap_err(),
            RecoveryError::InsufficientCert
        );
    }

    #[test]
    fn prosecutor_must_be_partial_member() {
        let f = fixture();
        let p = prosecution(&f, equivocation(&f, 0), 4);
        assert_eq!(
            reselect_leader(&p, &f.crypto, &f.committee, &f.referee, &[NodeId(2)], &f.keys[0].public).unwrap_err(),
            RecoveryError::NotPartialMember
        );
    }
}
