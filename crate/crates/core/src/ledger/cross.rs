//! Cross-shard legs: the source committee certifies TXList_{i,j}, its leader
//! forwards the list with the certificate and member list, and the
//! destination committee agrees on it after checking the certificate against
//! the source's agreed semi-commitment.

use crate::codec::Encoder;
use crate::committee::{AgreedCommitment, MemberList};
use crate::consensus::{Certificate, Proposal, Roster};
use crate::crypto::{hash, CryptoProvider, Digest, PublicKey, SecretKey, Signature};
use crate::net::NodeId;

use super::tx::{Transaction, TxId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrossList {
    pub source: u32,
    pub dest: u32,
    pub round: u64,
    pub txs: Vec<Transaction>,
}

impl Proposal for CrossList {
    fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::new("CROSS_LIST");
        e.u32(self.source).u32(self.dest).u64(self.round).len(self.txs.len());
        for t in &self.txs {
            t.encode_into(&mut e);
        }
        e.into_bytes()
    }
}

impl CrossList {
    pub fn contains(&self, id: &TxId) -> bool {
        self.txs.iter().any(|t| t.id() == *id)
    }
}

/// TXList_{i,j} as sent by l_i, signed by the sender.
#[derive(Clone, Debug)]
pub struct SignedForward {
    pub source: u32,
    pub dest: u32,
    pub round: u64,
    pub list: CrossList,
    pub cert: Certificate,
    pub members: MemberList,
    pub sender: NodeId,
    pub sig: Signature,
}

impl SignedForward {
    fn signing_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::new("FORWARD");
        e.u32(self.source)
            .u32(self.dest)
            .u64(self.round)
            .digest(&self.list.digest())
            .digest(&self.cert.digest)
            .len(self.cert.votes.len());
        for v in &self.cert.votes {
            e.u32(v.voter.0).sig(&v.sig);
        }
        e.digest(&self.members.digest()).u32(self.sender.0);
        e.into_bytes()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn sign(
        list: CrossList,
        cert: Certificate,
        members: MemberList,
        sender: NodeId,
        crypto: &dyn CryptoProvider,
        secret: &SecretKey,
    ) -> Self {
        let mut f = SignedForward {
            source: list.source,
            dest: list.dest,
            round: list.round,
            list,
            cert,
            members,
            sender,
            sig: Signature {
                signer: secret.public_key(),
                bytes: Digest::ZERO,
            },
        };
        f.sig = crypto.sign(secret, &f.signing_bytes());
        f
    }

    pub fn verify_signature(&self, crypto: &dyn CryptoProvider, key: &PublicKey) -> bool {
        crypto.verify(key, &self.signing_bytes(), &self.sig)
    }

    /// The list is what a majority of the committee committed to under
    /// `commitment` actually certified.
    pub fn backed_by(&self, crypto: &dyn CryptoProvider, commitment: &Digest) -> bool {
        self.members.digest() == *commitment
            && self.list.source == self.source
            && self.list.dest == self.dest
            && self.list.round == self.round
            && self.cert.digest == self.list.digest()
            && self.cert.verify(crypto, &self.members.roster())
    }

    pub fn units(&self) -> usize {
        self.list.txs.len() + self.cert.votes.len() + self.members.len()
    }
}

/// What C_j agrees on: the forwarded leg plus the source commitment that
/// makes it checkable by every member.
#[derive(Clone, Debug)]
pub struct CrossAccept {
    pub forward: SignedForward,
    pub source_commitment: AgreedCommitment,
}

impl Proposal for CrossAccept {
    fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::new("CROSS_ACCEPT");
        e.bytes(&self.forward.signing_bytes())
            .sig(&self.forward.sig)
            .u32(self.source_commitment.committee)
            .digest(&self.source_commitment.digest)
            .key(&self.source_commitment.leader);
        e.into_bytes()
    }
}

impl CrossAccept {
    /// Validity check a destination member runs before echoing.
    pub fn check(&self, crypto: &dyn CryptoProvider, referee: &Roster, dest: u32, round: u64, committees: u32) -> bool {
        let f = &self.forward;
        f.dest == dest
            && f.round == round
            && self.source_commitment.committee == f.source
            && self.source_commitment.round == round
            && self.source_commitment.verify(crypto, referee)
            && f.backed_by(crypto, &self.source_commitment.digest)
            && f.list
                .txs
                .iter()
                .all(|t| t.foreign_output_shards(f.source, committees).contains(&dest))
    }

    pub fn key(&self) -> (u32, u32) {
        (self.forward.source, self.forward.dest)
    }
}

/// C_j's certified acceptance, returned to l_i and the referee committee.
#[derive(Clone, Debug)]
pub struct CrossResult {
    pub accept: CrossAccept,
    pub cert: Certificate,
}

impl CrossResult {
    pub fn verify(&self, crypto: &dyn CryptoProvider, dest_roster: &Roster) -> bool {
        self.cert.digest == self.accept.digest() && self.cert.verify(crypto, dest_roster)
    }

    pub fn digest(&self) -> Digest {
        let mut e = Encoder::new("CROSS_RESULT");
        e.digest(&self.accept.digest()).digest(&self.cert.digest);
        hash(&e.into_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::{InstanceId, SignedVote, VoteKind};
    use crate::crypto::{KeyPair, SimCrypto};

    fn setup() -> (SimCrypto, Vec<KeyPair>, MemberList, CrossList) {
        let mut crypto = SimCrypto::new(9);
        let keys: Vec<KeyPair> = (0..5)
            .map(|i| crypto.generate_keypair(format!("s{i}").as_bytes()))
            .collect();
        let members: MemberList = keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.public, NodeId(i as u32)))
            .collect();
        let list = CrossList {
            source: 0,
            dest: 1,
            round: 2,
            txs: vec![Transaction {
                inputs: vec![hash(b"i")],
                outputs: vec![],
                signatures: vec![],
            }],
        };
        (crypto, keys, members, list)
    }

    fn cert(crypto: &SimCrypto, keys: &[KeyPair], digest: Digest, signers: usize) -> Certificate {
        let id = InstanceId {
            leader: NodeId(0),
            round: 2,
            seq: 9,
        };
        Certificate {
            id,
            digest,
            votes: (0..signers)
                .map(|i| SignedVote::sign(VoteKind::Confirm, id, digest, NodeId(i as u32), crypto, &keys[i].secret))
                .collect(),
        }
    }

    #[test]
    fn genuine_forward_is_backed() {
        let (crypto, keys, members, list) = setup();
        let c = cert(&crypto, &keys, list.digest(), 3);
        let f = SignedForward::sign(list, c, members.clone(), NodeId(0), &crypto, &keys[0].secret);
        assert!(f.verify_signature(&crypto, &keys[0].public));
        assert!(f.backed_by(&crypto, &members.digest()));
    }

    #[test]
    fn concealed_tx_breaks_backing() {
        let (crypto, keys, members, list) = setup();
        let c = cert(&crypto, &keys, list.digest(), 3);
        let mut shorter = list.clone();
        shorter.txs.clear();
        let f = SignedForward::sign(shorter, c, members.clone(), NodeId(0), &crypto, &keys[0].secret);
        assert!(!f.backed_by(&crypto, &members.digest()));
    }

    #[test]
    fn minority_cert_or_wrong_members_fail() {
        let (crypto, keys, members, list) = setup();
        let c = cert(&crypto, &keys, list.digest(), 2);
        let f = SignedForward::sign(list.clone(), c, members.clone(), NodeId(0), &crypto, &keys[0].secret);
        assert!(!f.backed_by(&crypto, &members.digest()));
        let c = cert(&crypto, &keys, list.digest(), 3);
        let f = SignedForward::sign(list, c, members, NodeId(0), &crypto, &keys[0].secret);
        assert!(!f.backed_by(&crypto, &hash(b"some other commitment")));
    }
}
