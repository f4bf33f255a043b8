//! Deterministic simulation cryptography: the hash oracle, signatures and a VRF.
//!
//! Every primitive is built from SHA-256 keyed with the secret key. Verification
//! goes through a registry of all key pairs created by the provider, which gives
//! exact unforgeability semantics without real public-key hardness: a signature
//! verifies only if it was produced with the secret key registered for the
//! claimed signer.

use std::collections::BTreeMap;
use std::fmt;

use sha2::{Digest as _, Sha256};

/// Length of every digest in octets.
pub const DIGEST_LEN: usize = 32;

/// Output of the hash oracle.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Digest(pub [u8; DIGEST_LEN]);

impl Digest {
    /// The all-ones digest, the largest value a digest can take.
    pub const MAX: Digest = Digest([0xff; DIGEST_LEN]);
    pub const ZERO: Digest = Digest([0; DIGEST_LEN]);

    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    /// Remainder of the digest read as a big-endian unsigned integer.
    pub fn mod_u64(&self, modulus: u64) -> u64 {
        assert!(modulus > 0, "modulus must be positive");
        let m = modulus as u128;
        self.0.iter().fold(0u128, |acc, &b| ((acc << 8) | b as u128) % m) as u64
    }

    /// Leading 64 bits as a big-endian integer.
    pub fn prefix_u64(&self) -> u64 {
        u64::from_be_bytes(self.0[..8].try_into().expect("8 bytes"))
    }

    pub fn xor(&self, other: &Digest) -> Digest {
        let mut out = [0u8; DIGEST_LEN];
        for (i, byte) in out.iter_mut().enumerate() {
            *byte = self.0[i] ^ other.0[i];
        }
        Digest(out)
    }

    pub fn to_hex(&self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(s: &str) -> Option<Digest> {
        if s.len() != DIGEST_LEN * 2 || !s.is_ascii() {
            return None;
        }
        let mut out = [0u8; DIGEST_LEN];
        for (i, byte) in out.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).ok()?;
        }
        Some(Digest(out))
    }

    /// Digest whose big-endian value is `floor(MAX * fraction)`, clamped to
    /// `[0, MAX]`. Used to build difficulty targets.
    pub fn scaled_max(fraction: f64) -> Digest {
        if fraction.is_nan() || fraction <= 0.0 {
            return Digest::ZERO;
        }
        if fraction >= 1.0 {
            return Digest::MAX;
        }
        // 64 bits of precision are plenty for toy difficulty targets.
        let top = (fraction * u64::MAX as f64) as u64;
        let mut out = [0xffu8; DIGEST_LEN];
        out[..8].copy_from_slice(&top.to_be_bytes());
        Digest(out)
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({}..)", &self.to_hex()[..12])
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// SHA-256 of `input`.
pub fn hash(input: &[u8]) -> Digest {
    Digest(Sha256::digest(input).into())
}

/// Hash of several fields, each prefixed with its length so that field
/// boundaries are unambiguous.
pub fn hash_parts(parts: &[&[u8]]) -> Digest {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_be_bytes());
        hasher.update(part);
    }
    Digest(hasher.finalize().into())
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PublicKey(pub [u8; DIGEST_LEN]);

impl PublicKey {
    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        Digest(self.0).to_hex()
    }

    pub fn from_hex(s: &str) -> Option<PublicKey> {
        Digest::from_hex(s).map(|d| PublicKey(d.0))
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({}..)", &self.to_hex()[..12])
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct SecretKey([u8; DIGEST_LEN]);

impl SecretKey {
    pub fn public_key(&self) -> PublicKey {
        PublicKey(hash_parts(&[b"cycledger/pk", &self.0]).0)
    }
}

impl fmt::Debug for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SecretKey(..)")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KeyPair {
    pub public: PublicKey,
    pub secret: SecretKey,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    pub signer: PublicKey,
    pub bytes: Digest,
}

impl Signature {
    pub fn to_bytes(&self) -> [u8; 2 * DIGEST_LEN] {
        let mut out = [0u8; 2 * DIGEST_LEN];
        out[..DIGEST_LEN].copy_from_slice(&self.signer.0);
        out[DIGEST_LEN..].copy_from_slice(&self.bytes.0);
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VrfOutput {
    pub hash: Digest,
    pub proof: Signature,
}

/// Interface the protocol uses for all cryptography.
pub trait CryptoProvider {
    fn hash(&self, input: &[u8]) -> Digest {
        hash(input)
    }
    fn sign(&self, secret: &SecretKey, message: &[u8]) -> Signature;
    fn verify(&self, public: &PublicKey, message: &[u8], signature: &Signature) -> bool;
    fn vrf_eval(&self, secret: &SecretKey, input: &[u8]) -> VrfOutput;
    fn vrf_verify(&self, public: &PublicKey, input: &[u8], hash: &Digest, proof: &Signature) -> bool;
}

fn keyed_signature(secret: &SecretKey, message: &[u8]) -> Digest {
    hash_parts(&[b"cycledger/sig", &secret.0, message])
}

fn keyed_vrf(secret: &SecretKey, input: &[u8]) -> Digest {
    hash_parts(&[b"cycledger/vrf", &secret.0, input])
}

/// Keyed-hash provider with a registry of every key pair it has issued.
#[derive(Clone, Debug)]
pub struct SimCrypto {
    seed: u64,
    registry: BTreeMap<PublicKey, SecretKey>,
}

impl SimCrypto {
    pub fn new(seed: u64) -> Self {
        SimCrypto {
            seed,
            registry: BTreeMap::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derives and registers the key pair for `label`. The same (seed, label)
    /// always yields the same pair.
    pub fn generate_keypair(&mut self, label: &[u8]) -> KeyPair {
        let secret = SecretKey(hash_parts(&[b"cycledger/sk", &self.seed.to_be_bytes(), label]).0);
        let public = secret.public_key();
        self.registry.insert(public, secret);
        KeyPair { public, secret }
    }

    pub fn is_registered(&self, public: &PublicKey) -> bool {
        self.registry.contains_key(public)
    }

    pub fn registered_count(&self) -> usize {
        self.registry.len()
    }
}

impl CryptoProvider for SimCrypto {
    fn sign(&self, secret: &SecretKey, message: &[u8]) -> Signature {
        Signature {
            signer: secret.public_key(),
            bytes: keyed_signature(secret, message),
        }
    }

    fn verify(&self, public: &PublicKey, message: &[u8], signature: &Signature) -> bool {
        if signature.signer != *public {
            return false;
        }
        match self.registry.get(public) {
            Some(secret) => keyed_signature(secret, message) == signature.bytes,
            None => false,
        }
    }

    fn vrf_eval(&self, secret: &SecretKey, input: &[u8]) -> VrfOutput {
        let hash = keyed_vrf(secret, input);
        let proof = self.sign(secret, &vrf_proof_message(&hash, input));
        VrfOutput { hash, proof }
    }

    fn vrf_verify(&self, public: &PublicKey, input: &[u8], hash: &Digest, proof: &Signature) -> bool {
        let Some(secret) = self.registry.get(public) else {
            return false;
        };
        keyed_vrf(secret, input) == *hash && self.verify(public, &vrf_proof_message(hash, input), proof)
    }
}

fn vrf_proof_message(hash: &Digest, input: &[u8]) -> Vec<u8> {
    let mut msg = Vec::with_capacity(8 + DIGEST_LEN + input.len());
    msg.extend_from_slice(b"vrfproof");
    msg.extend_from_slice(&hash.0);
    msg.extend_from_slice(input);
    msg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn provider() -> (SimCrypto, KeyPair, KeyPair) {
        let mut c = SimCrypto::new(7);
        let a = c.generate_keypair(b"a");
        let b = c.generate_keypair(b"b");
        (c, a, b)
    }

    #[test]
    fn empty_hash_golden() {
        assert_eq!(
            hash(b"").to_hex(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn hash_is_deterministic_and_sensitive() {
        assert_eq!(hash(b"abc"), hash(b"abc"));
        assert_ne!(hash(b"abc"), hash(b"abc\0"));
        assert_ne!(hash_parts(&[b"ab", b"c"]), hash_parts(&[b"a", b"bc"]));
    }

    #[test]
    fn signature_round_trip_and_tamper() {
        let (c, a, b) = provider();
        let sig = c.sign(&a.secret, b"hello");
        assert!(c.verify(&a.public, b"hello", &sig));
        assert!(!c.verify(&a.public, b"hellp", &sig));
        assert!(!c.verify(&b.public, b"hello", &sig));
        let mut bad = sig;
        bad.bytes.0[3] ^= 1;
        assert!(!c.verify(&a.public, b"hello", &bad));
    }

    #[test]
    fn unregistered_keys_never_verify() {
        let (c, a, _) = provider();
        let mut other = SimCrypto::new(99);
        let stranger = other.generate_keypair(b"x");
        let sig = other.sign(&stranger.secret, b"m");
        assert!(!c.verify(&stranger.public, b"m", &sig));
        // A signature made with a foreign key but claiming to be `a`.
        let forged = Signature {
            signer: a.public,
            bytes: sig.bytes,
        };
        assert!(!c.verify(&a.public, b"m", &forged));
    }

    #[test]
    fn vrf_round_trip_and_binding() {
        let (c, a, b) = provider();
        let out = c.vrf_eval(&a.secret, b"input");
        assert!(c.vrf_verify(&a.public, b"input", &out.hash, &out.proof));
        assert!(!c.vrf_verify(&a.public, b"input2", &out.hash, &out.proof));
        let mut h = out.hash;
        h.0[0] ^= 0x80;
        assert!(!c.vrf_verify(&a.public, b"input", &h, &out.proof));
        let mut p = out.proof;
        p.bytes.0[31] ^= 1;
        assert!(!c.vrf_verify(&a.public, b"input", &out.hash, &p));
        let other = c.vrf_eval(&b.secret, b"input");
        assert_ne!(other.hash, out.hash);
        assert!(!c.vrf_verify(&b.public, b"input", &out.hash, &out.proof));
    }

    #[test]
    fn keys_reproducible_across_instances() {
        let mut c1 = SimCrypto::new(5);
        let mut c2 = SimCrypto::new(5);
        let k1 = c1.generate_keypair(b"node-1");
        let k2 = c2.generate_keypair(b"node-1");
        assert_eq!(k1, k2);
        assert_eq!(c1.vrf_eval(&k1.secret, b"q"), c2.vrf_eval(&k2.secret, b"q"));
        assert_ne!(SimCrypto::new(6).generate_keypair(b"node-1"), k1);
    }

    #[test]
    fn digest_mod_is_big_endian() {
        let mut d = [0u8; 32];
        d[31] = 13;
        assert_eq!(Digest(d).mod_u64(5), 3);
        d[30] = 1; // 256 + 13 = 269
        assert_eq!(Digest(d).mod_u64(10), 9);
        assert_eq!(Digest::MAX.mod_u64(1), 0);
        // 2^256 - 1 mod 7 == 1 because 2^3 == 1 (mod 7) and 256 == 1 (mod 3)
        assert_eq!(Digest::MAX.mod_u64(7), (2u64.pow(1) - 1) % 7);
    }

    #[test]
    fn hex_round_trip() {
        let d = hash(b"x");
        assert_eq!(Digest::from_hex(&d.to_hex()), Some(d));
        assert_eq!(Digest::from_hex("zz"), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn single_bit_mutation_breaks_signature(msg in proptest::collection::vec(any::<u8>(), 1..64), bit in 0usize..512) {
                let (c, a, _) = provider();
                let sig = c.sign(&a.secret, &msg);
                prop_assert!(c.verify(&a.public, &msg, &sig));
                let mut m2 = msg.clone();
                let idx = bit % (m2.len() * 8);
                m2[idx / 8] ^= 1 << (idx % 8);
                prop_assert!(!c.verify(&a.public, &m2, &sig));
                let mut s2 = sig;
                s2.bytes.0[(bit / 8) % 32] ^= 1 << (bit % 8);
                prop_assert!(!c.verify(&a.public, &msg, &s2));
            }
        }
    }
}
