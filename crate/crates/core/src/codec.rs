//! Canonical byte encoding used for digests and signatures.
//!
//! Integers are big-endian and fixed width, byte strings are prefixed with a
//! 32-bit length. Two values encode equally iff they are equal.

use crate::crypto::{Digest, PublicKey, Signature};

#[derive(Clone, Debug, Default)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new(domain: &str) -> Self {
        let mut e = Encoder { buf: Vec::new() };
        e.bytes(domain.as_bytes());
        e
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn i8(&mut self, v: i8) -> &mut Self {
        self.buf.push(v as u8);
        self
    }

    pub fn f64(&mut self, v: f64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_bits().to_be_bytes());
        self
    }

    pub fn bytes(&mut self, v: &[u8]) -> &mut Self {
        self.u32(v.len() as u32);
        self.buf.extend_from_slice(v);
        self
    }

    pub fn digest(&mut self, d: &Digest) -> &mut Self {
        self.buf.extend_from_slice(&d.0);
        self
    }

    pub fn key(&mut self, k: &PublicKey) -> &mut Self {
        self.buf.extend_from_slice(&k.0);
        self
    }

    pub fn sig(&mut self, s: &Signature) -> &mut Self {
        self.buf.extend_from_slice(&s.to_bytes());
        self
    }

    pub fn len(&mut self, n: usize) -> &mut Self {
        self.u32(n as u32)
    }

    pub fn finish(&self) -> Vec<u8> {
        self.buf.clone()
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}
