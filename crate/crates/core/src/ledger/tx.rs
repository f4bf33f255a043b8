use std::collections::BTreeSet;

use crate::codec::Encoder;
use crate::crypto::{hash, CryptoProvider, Digest, KeyPair, PublicKey, Signature};

pub type UtxoId = Digest;
pub type TxId = Digest;

/// Shard that owns everything belonging to `owner`: H(PK) mod m.
pub fn shard_of(owner: &PublicKey, committees: u32) -> u32 {
    hash(&owner.0).mod_u64(committees as u64) as u32
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Output {
    pub owner: PublicKey,
    pub amount: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Utxo {
    pub id: UtxoId,
    pub owner: PublicKey,
    pub amount: u64,
    pub shard: u32,
}

pub fn utxo_id(tx: &TxId, index: u32) -> UtxoId {
    let mut e = Encoder::new("UTXO");
    e.digest(tx).u32(index);
    hash(&e.into_bytes())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transaction {
    pub inputs: Vec<UtxoId>,
    pub outputs: Vec<Output>,
    /// One owner signature per input, in input order.
    pub signatures: Vec<Signature>,
}

impl Transaction {
    pub fn body_bytes(inputs: &[UtxoId], outputs: &[Output]) -> Vec<u8> {
        let mut e = Encoder::new("TX");
        e.len(inputs.len());
        for i in inputs {
            e.digest(i);
        }
        e.len(outputs.len());
        for o in outputs {
            e.key(&o.owner).u64(o.amount);
        }
        e.into_bytes()
    }

    /// Builds a transaction whose inputs all belong to `owner`.
    pub fn signed(inputs: Vec<UtxoId>, outputs: Vec<Output>, owner: &KeyPair, crypto: &dyn CryptoProvider) -> Self {
        let body = Self::body_bytes(&inputs, &outputs);
        let sig = crypto.sign(&owner.secret, &body);
        Transaction {
            signatures: vec![sig; inputs.len()],
            inputs,
            outputs,
        }
    }

    pub fn id(&self) -> TxId {
        hash(&Self::body_bytes(&self.inputs, &self.outputs))
    }

    pub fn output_total(&self) -> u64 {
        self.outputs.iter().map(|o| o.amount).sum()
    }

    pub fn has_duplicate_inputs(&self) -> bool {
        let set: BTreeSet<_> = self.inputs.iter().collect();
        set.len() != self.inputs.len()
    }

    /// UTXOs this transaction creates once packed.
    pub fn created_utxos(&self, committees: u32) -> Vec<Utxo> {
        let id = self.id();
        self.outputs
            .iter()
            .enumerate()
            .map(|(i, o)| Utxo {
                id: utxo_id(&id, i as u32),
                owner: o.owner,
                amount: o.amount,
                shard: shard_of(&o.owner, committees),
            })
            .collect()
    }

    /// Shards other than `home` that receive an output.
    pub fn foreign_output_shards(&self, home: u32, committees: u32) -> Vec<u32> {
        let set: BTreeSet<u32> = self
            .outputs
            .iter()
            .map(|o| shard_of(&o.owner, committees))
            .filter(|&s| s != home)
            .collect();
        set.into_iter().collect()
    }

    pub fn encode_into(&self, e: &mut Encoder) {
        e.bytes(&Self::body_bytes(&self.inputs, &self.outputs));
        e.len(self.signatures.len());
        for s in &self.signatures {
            e.sig(s);
        }
    }

    pub fn units(&self) -> usize {
        1
    }
}
