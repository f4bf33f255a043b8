//! Commit-reveal randomness inside the referee committee.
//!
//! Each member commits to H(contribution), later reveals the contribution, and
//! the next randomness is the hash of the XOR of every reveal matching its
//! commitment. A member who withholds its reveal is simply left out, which
//! lets the last revealers choose among 2^a outcomes for a withholding
//! members. A PVSS beacon would remove that bias.

use std::collections::BTreeMap;

use crate::codec::Encoder;
use crate::crypto::{hash, CryptoProvider, Digest, SecretKey};
use crate::net::NodeId;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RoundRandomness {
    pub round: u64,
    pub value: Digest,
}

/// R^0, derived from the run seed.
pub fn genesis_randomness(seed: u64) -> RoundRandomness {
    let mut e = Encoder::new("GENESIS");
    e.u64(seed);
    RoundRandomness {
        round: 0,
        value: hash(&e.into_bytes()),
    }
}

/// A member's secret contribution for `round`.
pub fn beacon_contribution(crypto: &dyn CryptoProvider, secret: &SecretKey, round: u64) -> Digest {
    let mut e = Encoder::new("BEACON");
    e.u64(round);
    crypto.vrf_eval(secret, &e.into_bytes()).hash
}

pub fn beacon_commitment(contribution: &Digest) -> Digest {
    let mut e = Encoder::new("BEACON_COMMIT");
    e.digest(contribution);
    hash(&e.into_bytes())
}

/// Combines reveals into R^{round}. Reveals without a matching commitment are
/// ignored. Returns the value and the contributors that were counted.
pub fn next_randomness(
    round: u64,
    commits: &BTreeMap<NodeId, Digest>,
    reveals: &BTreeMap<NodeId, Digest>,
) -> (RoundRandomness, Vec<NodeId>) {
    let mut acc = Digest::ZERO;
    let mut used = Vec::new();
    for (id, contribution) in reveals {
        if commits.get(id) == Some(&beacon_commitment(contribution)) {
            acc = acc.xor(contribution);
            used.push(*id);
        }
    }
    let mut e = Encoder::new("BEACON_OUT");
    e.u64(round).digest(&acc);
    (
        RoundRandomness {
            round,
            value: hash(&e.into_bytes()),
        },
        used,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::SimCrypto;
    use std::collections::BTreeSet;

    fn setup(n: usize) -> (SimCrypto, Vec<crate::crypto::KeyPair>) {
        let mut c = SimCrypto::new(8);
        let k = (0..n).map(|i| c.generate_keypair(format!("r{i}").as_bytes())).collect();
        (c, k)
    }

    fn maps(
        crypto: &SimCrypto,
        keys: &[crate::crypto::KeyPair],
        round: u64,
    ) -> (BTreeMap<NodeId, Digest>, BTreeMap<NodeId, Digest>) {
        let mut commits = BTreeMap::new();
        let mut reveals = BTreeMap::new();
        for (i, k) in keys.iter().enumerate() {
            let c = beacon_contribution(crypto, &k.secret, round);
            commits.insert(NodeId(i as u32), beacon_commitment(&c));
            reveals.insert(NodeId(i as u32), c);
        }
        (commits, reveals)
    }

    #[test]
    fn deterministic_and_excludes_withholders() {
        let (crypto, keys) = setup(4);
        let (commits, reveals) = maps(&crypto, &keys, 2);
        let (a, used) = next_randomness(2, &commits, &reveals);
        let (b, _) = next_randomness(2, &commits, &reveals);
        assert_eq!(a, b);
        assert_eq!(used.len(), 4);
        let mut partial = reveals.clone();
        partial.remove(&NodeId(3));
        let (c, used) = next_randomness(2, &commits, &partial);
        assert_eq!(used.len(), 3);
        assert_ne!(a, c);
    }

    #[test]
    fn mismatched_reveal_is_ignored() {
        let (crypto, keys) = setup(3);
        let (commits, mut reveals) = maps(&crypto, &keys, 1);
        reveals.insert(NodeId(0), hash(b"lie"));
        let (_, used) = next_randomness(1, &commits, &reveals);
        assert_eq!(used, vec![NodeId(1), NodeId(2)]);
    }

    #[test]
    fn withholding_bias_is_bounded_by_subsets() {
        // Four referees, two adversarial. After seeing the honest reveals the
        // adversary picks which of its own to publish: 2^2 distinct outcomes.
        let (crypto, keys) = setup(4);
        let (commits, reveals) = maps(&crypto, &keys, 5);
        let adversarial = [NodeId(2), NodeId(3)];
        let mut outcomes = BTreeSet::new();
        for mask in 0..4u8 {
            let mut r = reveals.clone();
            for (bit, id) in adversarial.iter().enumerate() {
                if mask & (1 << bit) == 0 {
                    r.remove(id);
                }
            }
            outcomes.insert(next_randomness(5, &commits, &r).0.value);
        }
        assert_eq!(outcomes.len(), 1 << adversarial.len());
    }
}
