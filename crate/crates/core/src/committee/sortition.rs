use crate::codec::Encoder;
use crate::crypto::{CryptoProvider, Digest, KeyPair, PublicKey, VrfOutput};
use crate::net::NodeId;

/// A node's verifiable self-assignment to a committee for one round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SortitionClaim {
    pub key: PublicKey,
    pub address: NodeId,
    pub round: u64,
    pub committee: u32,
    pub vrf: VrfOutput,
}

/// VRF input for the common-member lottery of `round`.
pub fn sortition_input(round: u64, randomness: &Digest) -> Vec<u8> {
    let mut e = Encoder::new("COMMON_MEMBER");
    e.u64(round).digest(randomness);
    e.into_bytes()
}

/// Evaluates the lottery: committee = VRF hash mod m.
pub fn crypto_sort(
    crypto: &dyn CryptoProvider,
    keys: &KeyPair,
    address: NodeId,
    round: u64,
    randomness: &Digest,
    m: u32,
) -> SortitionClaim {
    assert!(m >= 1, "at least one committee is required");
    let vrf = crypto.vrf_eval(&keys.secret, &sortition_input(round, randomness));
    SortitionClaim {
        key: keys.public,
        address,
        round,
        committee: vrf.hash.mod_u64(m as u64) as u32,
        vrf,
    }
}

impl SortitionClaim {
    pub fn verify(&self, crypto: &dyn CryptoProvider, round: u64, randomness: &Digest, m: u32) -> bool {
        self.round == round
            && crypto.vrf_verify(
                &self.key,
                &sortition_input(round, randomness),
                &self.vrf.hash,
                &self.vrf.proof,
            )
            && self.vrf.hash.mod_u64(m as u64) == self.committee as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{hash, SimCrypto};

    #[test]
    fn committee_is_hash_mod_m() {
        let mut crypto = SimCrypto::new(5);
        let kp = crypto.generate_keypair(b"a");
        let r = hash(b"R");
        let claim = crypto_sort(&crypto, &kp, NodeId(1), 4, &r, 7);
        assert_eq!(claim.committee as u64, claim.vrf.hash.mod_u64(7));
        assert!(claim.verify(&crypto, 4, &r, 7));
        assert!(!claim.verify(&crypto, 5, &r, 7));
        assert!(!claim.verify(&crypto, 4, &hash(b"other"), 7));
    }

    #[test]
    fn single_committee_takes_everyone() {
        let mut crypto = SimCrypto::new(5);
        let r = hash(b"R");
        for i in 0..50u32 {
            let kp = crypto.generate_keypair(&i.to_be_bytes());
            assert_eq!(crypto_sort(&crypto, &kp, NodeId(i), 1, &r, 1).committee, 0);
        }
    }

    #[test]
    fn forged_committee_fails() {
        let mut crypto = SimCrypto::new(5);
        let kp = crypto.generate_keypair(b"a");
        let r = hash(b"R");
        let mut claim = crypto_sort(&crypto, &kp, NodeId(1), 4, &r, 7);
        claim.committee = (claim.committee + 1) % 7;
        assert!(!claim.verify(&crypto, 4, &r, 7));
    }

    #[test]
    fn committee_sizes_are_uniform() {
        // Pearson chi-square over m = 10 bins; 27.88 is the 0.999 quantile
        // of chi-square with 9 degrees of freedom.
        let mut crypto = SimCrypto::new(99);
        let r = hash(b"uniformity");
        let n = 10_000u32;
        let m = 10u32;
        let mut counts = vec![0f64; m as usize];
        for i in 0..n {
            let kp = crypto.generate_keypair(&i.to_be_bytes());
            counts[crypto_sort(&crypto, &kp, NodeId(i), 1, &r, m).committee as usize] += 1.0;
        }
        let expected = n as f64 / m as f64;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        assert!(chi2 < 27.88, "chi-square {chi2}");
        let sigma = (n as f64 * (1.0 / m as f64) * (1.0 - 1.0 / m as f64)).sqrt();
        for c in counts {
            assert!((c - expected).abs() < 5.0 * sigma);
        }
    }
}
