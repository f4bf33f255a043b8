use std::collections::{BTreeMap, BTreeSet};

use crate::crypto::CryptoProvider;

use super::tx::{Transaction, Utxo, UtxoId};

/// Why a transaction failed the validity predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rejection {
    Empty,
    MissingInput,
    DuplicateInput,
    BadSignature,
    Overspend,
    MixedShards,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UtxoSet {
    utxos: BTreeMap<UtxoId, Utxo>,
}

impl UtxoSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, u: Utxo) {
        self.utxos.insert(u.id, u);
    }

    pub fn get(&self, id: &UtxoId) -> Option<&Utxo> {
        self.utxos.get(id)
    }

    pub fn contains(&self, id: &UtxoId) -> bool {
        self.utxos.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.utxos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utxos.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Utxo> {
        self.utxos.values()
    }

    pub fn total_value(&self) -> u128 {
        self.utxos.values().map(|u| u.amount as u128).sum()
    }

    /// The part of the state owned by one shard.
    pub fn shard_view(&self, shard: u32) -> UtxoSet {
        UtxoSet {
            utxos: self
                .utxos
                .iter()
                .filter(|(_, u)| u.shard == shard)
                .map(|(k, u)| (*k, *u))
                .collect(),
        }
    }

    /// Fee of `tx` if it passes V against this state: every input exists and
    /// is unspent, signatures verify, inputs share one shard and Σin ≥ Σout.
    pub fn check(&self, tx: &Transaction, crypto: &dyn CryptoProvider) -> Result<u64, Rejection> {
        if tx.inputs.is_empty() {
            return Err(Rejection::Empty);
        }
        if tx.has_duplicate_inputs() {
            return Err(Rejection::DuplicateInput);
        }
        if tx.signatures.len() != tx.inputs.len() {
            return Err(Rejection::BadSignature);
        }
        let body = Transaction::body_bytes(&tx.inputs, &tx.outputs);
        let mut total: u128 = 0;
        let mut shards = BTreeSet::new();
        for (input, sig) in tx.inputs.iter().zip(&tx.signatures) {
            let utxo = self.get(input).ok_or(Rejection::MissingInput)?;
            if !crypto.verify(&utxo.owner, &body, sig) {
                return Err(Rejection::BadSignature);
            }
            shards.insert(utxo.shard);
            total += utxo.amount as u128;
        }
        if shards.len() > 1 {
            return Err(Rejection::MixedShards);
        }
        let out: u128 = tx.outputs.iter().map(|o| o.amount as u128).sum();
        if out > total {
            return Err(Rejection::Overspend);
        }
        Ok((total - out) as u64)
    }

    pub fn validate(&self, tx: &Transaction, crypto: &dyn CryptoProvider) -> bool {
        self.check(tx, crypto).is_ok()
    }

    /// Spends the inputs and adds the outputs. The caller has validated `tx`.
    pub fn apply(&mut self, tx: &Transaction, committees: u32) {
        for i in &tx.inputs {
            self.utxos.remove(i);
        }
        for u in tx.created_utxos(committees) {
            self.insert(u);
        }
    }

    /// Shard holding the inputs of `tx`, if they exist and agree.
    pub fn input_shard(&self, tx: &Transaction) -> Option<u32> {
        let mut shard = None;
        for i in &tx.inputs {
            let s = self.get(i)?.shard;
            if shard.is_some_and(|x| x != s) {
                return None;
            }
            shard = Some(s);
        }
        shard
    }
}
