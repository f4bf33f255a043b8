//! Member lists, semi-commitments and the referee's agreement on them.

use std::collections::{BTreeMap, BTreeSet};

use crate::codec::Encoder;
use crate::consensus::Roster;
use crate::crypto::{hash, CryptoProvider, Digest, PublicKey, SecretKey, Signature};
use crate::net::NodeId;
use crate::witness::{Evidence, Witness};

use super::sortition::SortitionClaim;

/// Endpoint label of a node, the "address" half of each member-list entry.
pub fn address_label(id: NodeId) -> String {
    format!("node-{}", id.0)
}

/// The list S: ⟨PK, address⟩ pairs kept sorted by public-key bytes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MemberList {
    entries: BTreeMap<PublicKey, NodeId>,
}

impl MemberList {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: PublicKey, address: NodeId) -> bool {
        self.entries.insert(key, address).is_none()
    }

    pub fn remove(&mut self, key: &PublicKey) -> bool {
        self.entries.remove(key).is_some()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains_key(&self, key: &PublicKey) -> bool {
        self.entries.contains_key(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PublicKey, &NodeId)> {
        self.entries.iter()
    }

    pub fn addresses(&self) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = self.entries.values().copied().collect();
        ids.sort();
        ids
    }

    pub fn is_superset_of(&self, other: &MemberList) -> bool {
        other.entries.keys().all(|k| self.entries.contains_key(k))
    }

    /// Roster used for agreement inside the committee this list describes.
    pub fn roster(&self) -> Roster {
        Roster::new(self.entries.iter().map(|(k, id)| (*id, *k)))
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::new("member-list");
        e.len(self.entries.len());
        for (key, id) in &self.entries {
            e.bytes(&key.0).bytes(address_label(*id).as_bytes());
        }
        e.into_bytes()
    }

    /// SEMI_COM = H(S) over the canonical encoding.
    pub fn digest(&self) -> Digest {
        hash(&self.encode())
    }
}

impl FromIterator<(PublicKey, NodeId)> for MemberList {
    fn from_iter<I: IntoIterator<Item = (PublicKey, NodeId)>>(iter: I) -> Self {
        MemberList {
            entries: iter.into_iter().collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SemiCommitment {
    pub committee: u32,
    pub round: u64,
    pub digest: Digest,
}

pub fn build_semi_commitment(committee: u32, round: u64, members: &MemberList) -> SemiCommitment {
    SemiCommitment {
        committee,
        round,
        digest: members.digest(),
    }
}

/// A SEMI_COM message as the leader signs it. `proofs` (Ψ) travels only to
/// the partial set and is not covered by the signature.
#[derive(Clone, Debug)]
pub struct SignedMemberList {
    pub committee: u32,
    pub round: u64,
    pub claimed_digest: Digest,
    pub members: MemberList,
    pub proofs: Vec<SortitionClaim>,
    pub sig: Signature,
}

impl SignedMemberList {
    fn signing_bytes(committee: u32, round: u64, claimed: &Digest, members: &MemberList) -> Vec<u8> {
        let mut e = Encoder::new("SEMI_COM");
        e.u32(committee).u64(round).digest(claimed).digest(&members.digest());
        e.into_bytes()
    }

    pub fn sign(
        committee: u32,
        round: u64,
        claimed_digest: Digest,
        members: MemberList,
        proofs: Vec<SortitionClaim>,
        crypto: &dyn CryptoProvider,
        secret: &SecretKey,
    ) -> Self {
        let sig = crypto.sign(
            secret,
            &Self::signing_bytes(committee, round, &claimed_digest, &members),
        );
        SignedMemberList {
            committee,
            round,
            claimed_digest,
            members,
            proofs,
            sig,
        }
    }

    pub fn verify(&self, crypto: &dyn CryptoProvider, leader_key: &PublicKey) -> bool {
        crypto.verify(
            leader_key,
            &Self::signing_bytes(self.committee, self.round, &self.claimed_digest, &self.members),
            &self.sig,
        )
    }

    pub fn without_proofs(&self) -> SignedMemberList {
        SignedMemberList {
            proofs: Vec::new(),
            ..self.clone()
        }
    }
}

/// Leader-signed acknowledgement that a member's claim was accepted into S.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClaimAck {
    pub committee: u32,
    pub round: u64,
    pub member: PublicKey,
    pub sig: Signature,
}

impl ClaimAck {
    fn signing_bytes(committee: u32, round: u64, member: &PublicKey) -> Vec<u8> {
        let mut e = Encoder::new("CLAIM_ACK");
        e.u32(committee).u64(round).key(member);
        e.into_bytes()
    }

    pub fn sign(
        committee: u32,
        round: u64,
        member: PublicKey,
        crypto: &dyn CryptoProvider,
        secret: &SecretKey,
    ) -> Self {
        ClaimAck {
            committee,
            round,
            member,
            sig: crypto.sign(secret, &Self::signing_bytes(committee, round, &member)),
        }
    }

    pub fn verify(&self, crypto: &dyn CryptoProvider, leader_key: &PublicKey) -> bool {
        crypto.verify(
            leader_key,
            &Self::signing_bytes(self.committee, self.round, &self.member),
            &self.sig,
        )
    }
}

/// Counts distinct roster members whose signature over `bytes` verifies.
pub fn quorum_signed(crypto: &dyn CryptoProvider, roster: &Roster, bytes: &[u8], sigs: &[(NodeId, Signature)]) -> bool {
    let mut seen = BTreeSet::new();
    for (id, sig) in sigs {
        match roster.key(*id) {
            Some(key) if crypto.verify(key, bytes, sig) => {
                seen.insert(*id);
            }
            _ => return false,
        }
    }
    seen.len() >= roster.quorum()
}

/// One referee member's confirmation of committee k's semi-commitment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CommitmentAck {
    pub committee: u32,
    pub round: u64,
    pub leader: PublicKey,
    pub digest: Digest,
    pub referee: NodeId,
    pub sig: Signature,
}

impl CommitmentAck {
    pub fn signing_bytes(committee: u32, round: u64, leader: &PublicKey, digest: &Digest) -> Vec<u8> {
        let mut e = Encoder::new("SEMI_COM_ACK");
        e.u32(committee).u64(round).key(leader).digest(digest);
        e.into_bytes()
    }

    pub fn sign(
        committee: u32,
        round: u64,
        leader: PublicKey,
        digest: Digest,
        referee: NodeId,
        crypto: &dyn CryptoProvider,
        secret: &SecretKey,
    ) -> Self {
        CommitmentAck {
            committee,
            round,
            leader,
            digest,
            referee,
            sig: crypto.sign(secret, &Self::signing_bytes(committee, round, &leader, &digest)),
        }
    }
}

/// A semi-commitment confirmed by more than half of the referee committee.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgreedCommitment {
    pub committee: u32,
    pub round: u64,
    pub leader: PublicKey,
    pub digest: Digest,
    pub sigs: Vec<(NodeId, Signature)>,
}

impl AgreedCommitment {
    pub fn verify(&self, crypto: &dyn CryptoProvider, referee: &Roster) -> bool {
        let bytes = CommitmentAck::signing_bytes(self.committee, self.round, &self.leader, &self.digest);
        quorum_signed(crypto, referee, &bytes, &self.sigs)
    }
}

/// Collects referee acknowledgements (ConfList of the exchange) until some
/// digest for a (committee, leader) has more than |C_R|/2 of them.
#[derive(Clone, Debug, Default)]
pub struct CommitmentCollector {
    votes: BTreeMap<(u32, PublicKey, Digest), BTreeMap<NodeId, Signature>>,
    agreed: BTreeMap<u32, AgreedCommitment>,
}

impl CommitmentCollector {
    /// Returns the agreed commitment when this ack completes a quorum.
    pub fn add(
        &mut self,
        ack: &CommitmentAck,
        crypto: &dyn CryptoProvider,
        referee: &Roster,
    ) -> Option<AgreedCommitment> {
        let key = referee.key(ack.referee)?;
        let bytes = CommitmentAck::signing_bytes(ack.committee, ack.round, &ack.leader, &ack.digest);
        if !crypto.verify(key, &bytes, &ack.sig) {
            return None;
        }
        let slot = self.votes.entry((ack.committee, ack.leader, ack.digest)).or_default();
        slot.insert(ack.referee, ack.sig);
        let fresh = self
            .agreed
            .get(&ack.committee)
            .is_none_or(|a| a.leader != ack.leader || a.digest != ack.digest);
        if slot.len() >= referee.quorum() && fresh {
            let agreed = AgreedCommitment {
                committee: ack.committee,
                round: ack.round,
                leader: ack.leader,
                digest: ack.digest,
                sigs: slot.iter().map(|(id, s)| (*id, *s)).collect(),
            };
            self.agreed.insert(ack.committee, agreed.clone());
            return Some(agreed);
        }
        None
    }

    pub fn get(&self, committee: u32) -> Option<&AgreedCommitment> {
        self.agreed.get(&committee)
    }

    pub fn len(&self) -> usize {
        self.agreed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agreed.is_empty()
    }
}

/// The partial-set check after the exchange: the leader's signed list must
/// hash to the referee-agreed digest and contain every member the leader
/// acknowledged to this partial member.
#[allow(clippy::result_large_err)]
pub fn verify_commitment_as_partial(
    crypto: &dyn CryptoProvider,
    leader: NodeId,
    leader_key: &PublicKey,
    agreed: &AgreedCommitment,
    acknowledged: &[ClaimAck],
    leader_list: &SignedMemberList,
) -> Result<(), Witness> {
    if !leader_list.verify(crypto, leader_key) {
        // Unsigned material is no evidence; nothing to report.
        return Ok(());
    }
    if agreed.leader == *leader_key && leader_list.members.digest() != agreed.digest {
        return Err(Witness {
            accused: leader,
            evidence: Evidence::CommitmentMismatch {
                list: leader_list.without_proofs(),
                agreed: agreed.clone(),
            },
        });
    }
    for ack in acknowledged {
        if ack.verify(crypto, leader_key) && !leader_list.members.contains_key(&ack.member) {
            return Err(Witness {
                accused: leader,
                evidence: Evidence::MemberOmission {
                    list: leader_list.without_proofs(),
                    ack: *ack,
                },
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{KeyPair, SimCrypto};

    fn keys(n: usize) -> (SimCrypto, Vec<KeyPair>) {
        let mut c = SimCrypto::new(11);
        let k = (0..n).map(|i| c.generate_keypair(format!("k{i}").as_bytes())).collect();
        (c, k)
    }

    #[test]
    fn digest_is_order_independent() {
        let (_, k) = keys(5);
        let a: MemberList = k
            .iter()
            .enumerate()
            .map(|(i, kp)| (kp.public, NodeId(i as u32)))
            .collect();
        let mut b = MemberList::new();
        for (i, kp) in k.iter().enumerate().rev() {
            b.insert(kp.public, NodeId(i as u32));
        }
        assert_eq!(a.digest(), b.digest());
        let mut c = a.clone();
        c.remove(&k[2].public);
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn empty_list_has_fixed_digest() {
        assert_eq!(MemberList::new().digest(), MemberList::new().digest());
        assert_ne!(MemberList::new().digest(), hash(&[]));
    }

    #[test]
    fn duplicate_insert_leaves_list_unchanged() {
        let (_, k) = keys(1);
        let mut s = MemberList::new();
        assert!(s.insert(k[0].public, NodeId(0)));
        let d = s.digest();
        assert!(!s.insert(k[0].public, NodeId(0)));
        assert_eq!(s.digest(), d);
    }

    fn agreed_for(crypto: &SimCrypto, referee: &[KeyPair], leader: PublicKey, digest: Digest) -> AgreedCommitment {
        let roster = Roster::new(
            referee
                .iter()
                .enumerate()
                .map(|(i, k)| (NodeId(100 + i as u32), k.public)),
        );
        let mut col = CommitmentCollector::default();
        let mut out = None;
        for (i, k) in referee.iter().enumerate() {
            let ack = CommitmentAck::sign(0, 1, leader, digest, NodeId(100 + i as u32), crypto, &k.secret);
            if let Some(a) = col.add(&ack, crypto, &roster) {
                out = Some(a);
            }
        }
        out.expect("quorum")
    }

    #[test]
    fn partial_check_cases() {
        let (crypto, k) = keys(8);
        let leader = &k[0];
        let referee = &k[5..8];
        let s: MemberList = k[..4]
            .iter()
            .enumerate()
            .map(|(i, kp)| (kp.public, NodeId(i as u32)))
            .collect();
        let signed = SignedMemberList::sign(0, 1, s.digest(), s.clone(), vec![], &crypto, &leader.secret);
        let agreed = agreed_for(&crypto, referee, leader.public, s.digest());
        let acks: Vec<ClaimAck> = k[1..4]
            .iter()
            .map(|kp| ClaimAck::sign(0, 1, kp.public, &crypto, &leader.secret))
            .collect();
        assert!(verify_commitment_as_partial(&crypto, NodeId(0), &leader.public, &agreed, &acks, &signed).is_ok());

        // leader's list drops member 3 although it acknowledged it
        let mut short = s.clone();
        short.remove(&k[3].public);
        let signed_short = SignedMemberList::sign(0, 1, short.digest(), short.clone(), vec![], &crypto, &leader.secret);
        let agreed_short = agreed_for(&crypto, referee, leader.public, short.digest());
        let w = verify_commitment_as_partial(&crypto, NodeId(0), &leader.public, &agreed_short, &acks, &signed_short)
            .unwrap_err();
        assert_eq!(w.evidence.kind(), "member-omission");
        let referee_roster = Roster::new(
            referee
                .iter()
                .enumerate()
                .map(|(i, kp)| (NodeId(100 + i as u32), kp.public)),
        );
        assert!(w.verify(&crypto, &leader.public, 1, &referee_roster));

        // referee agreed on a digest the signed list does not hash to
        let w =
            verify_commitment_as_partial(&crypto, NodeId(0), &leader.public, &agreed_short, &[], &signed).unwrap_err();
        assert_eq!(w.evidence.kind(), "commitment-mismatch");
        assert!(w.verify(&crypto, &leader.public, 1, &referee_roster));
    }

    #[test]
    fn collector_needs_strict_majority() {
        let (crypto, k) = keys(4);
        let roster = Roster::new(k.iter().enumerate().map(|(i, kp)| (NodeId(i as u32), kp.public)));
        let mut col = CommitmentCollector::default();
        let d = hash(b"d");
        for i in 0..2 {
            let ack = CommitmentAck::sign(0, 0, k[0].public, d, NodeId(i), &crypto, &k[i as usize].secret);
            assert!(col.add(&ack, &crypto, &roster).is_none());
        }
        let ack = CommitmentAck::sign(0, 0, k[0].public, d, NodeId(2), &crypto, &k[2].secret);
        assert!(col.add(&ack, &crypto, &roster).is_some());
    }
}
