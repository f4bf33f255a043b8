//! Synthetic users and the transactions they submit each round.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::Encoder;
use crate::crypto::{hash, CryptoProvider, KeyPair, PublicKey, SimCrypto};
use crate::ledger::{shard_of, Output, Transaction, Utxo, UtxoId, UtxoSet};

pub struct Workload {
    users: Vec<KeyPair>,
    by_key: BTreeMap<PublicKey, usize>,
    reserved: BTreeSet<UtxoId>,
    rng: ChaCha8Rng,
    committees: u32,
    invalid_rate: f64,
}

/// A generated transaction and whether it passed validation when submitted.
#[derive(Clone, Debug)]
pub struct Submission {
    pub tx: Transaction,
    pub shard: u32,
    pub valid: bool,
}

impl Workload {
    /// Creates `per_shard` users in every shard, each holding `coins` UTXOs
    /// of `amount`, and returns the workload with the genesis state.
    pub fn genesis(
        crypto: &mut SimCrypto,
        seed: u64,
        committees: u32,
        per_shard: usize,
        coins: usize,
        amount: u64,
        invalid_rate: f64,
    ) -> (Workload, UtxoSet) {
        let mut counts = vec![0usize; committees as usize];
        let mut users = Vec::new();
        let mut label = 0u64;
        while counts.iter().any(|&c| c < per_shard) {
            let kp = crypto.generate_keypair(format!("user/{label}").as_bytes());
            label += 1;
            let s = shard_of(&kp.public, committees) as usize;
            if counts[s] < per_shard {
                counts[s] += 1;
                users.push(kp);
            }
        }
        let mut state = UtxoSet::new();
        for (i, u) in users.iter().enumerate() {
            for j in 0..coins {
                let mut e = Encoder::new("GENESIS_UTXO");
                e.u64(i as u64).u64(j as u64);
                state.insert(Utxo {
                    id: hash(&e.into_bytes()),
                    owner: u.public,
                    amount,
                    shard: shard_of(&u.public, committees),
                });
            }
        }
        let by_key = users.iter().enumerate().map(|(i, u)| (u.public, i)).collect();
        let mut e = Encoder::new("WORKLOAD_RNG");
        e.u64(seed);
        let rng = ChaCha8Rng::from_seed(hash(&e.into_bytes()).0);
        (
            Workload {
                users,
                by_key,
                reserved: BTreeSet::new(),
                rng,
                committees,
                invalid_rate,
            },
            state,
        )
    }

    pub fn users(&self) -> &[KeyPair] {
        &self.users
    }

    /// Inputs spent by transactions that are still pending.
    pub fn set_reserved(&mut self, reserved: BTreeSet<UtxoId>) {
        self.reserved = reserved;
    }

    /// Up to `count` new transactions whose inputs live in `shard`.
    pub fn generate(
        &mut self,
        state: &UtxoSet,
        shard: u32,
        count: usize,
        crypto: &dyn CryptoProvider,
    ) -> Vec<Submission> {
        let mut coins: Vec<Utxo> = state
            .iter()
            .filter(|u| u.shard == shard && !self.reserved.contains(&u.id) && self.by_key.contains_key(&u.owner))
            .copied()
            .collect();
        coins.shuffle(&mut self.rng);
        coins.truncate(count);
        let mut out = Vec::with_capacity(coins.len());
        for u in coins {
            self.reserved.insert(u.id);
            let owner = self.users[self.by_key[&u.owner]];
            let recipient = loop {
                let r = &self.users[self.rng.gen_range(0..self.users.len())];
                if r.public != owner.public || self.users.len() == 1 {
                    break r.public;
                }
            };
            let tx = if self.rng.gen_bool(self.invalid_rate) {
                self.invalid(&u, &owner, recipient, crypto)
            } else {
                let fee = self.rng.gen_range(1..=3u64).min(u.amount);
                let spendable = u.amount - fee;
                let pay = if spendable >= 2 {
                    self.rng.gen_range(1..=spendable / 2)
                } else {
                    spendable
                };
                let mut outputs = vec![Output {
                    owner: recipient,
                    amount: pay,
                }];
                if spendable > pay {
                    outputs.push(Output {
                        owner: owner.public,
                        amount: spendable - pay,
                    });
                }
                Transaction::signed(vec![u.id], outputs, &owner, crypto)
            };
            let valid = state.validate(&tx, crypto);
            out.push(Submission { tx, shard, valid });
        }
        out
    }

    fn invalid(&mut self, u: &Utxo, owner: &KeyPair, recipient: PublicKey, crypto: &dyn CryptoProvider) -> Transaction {
        match self.rng.gen_range(0..3) {
            0 => {
                let mut e = Encoder::new("MISSING_INPUT");
                e.digest(&u.id).u64(self.rng.gen());
                Transaction::signed(
                    vec![hash(&e.into_bytes())],
                    vec![Output {
                        owner: recipient,
                        amount: 1,
                    }],
                    owner,
                    crypto,
                )
            }
            1 => Transaction::signed(
                vec![u.id],
                vec![Output {
                    owner: recipient,
                    amount: u.amount + 1,
                }],
                owner,
                crypto,
            ),
            _ => {
                let thief = self.users.iter().find(|k| k.public != owner.public).unwrap_or(owner);
                Transaction::signed(
                    vec![u.id],
                    vec![Output {
                        owner: recipient,
                        amount: u.amount / 2,
                    }],
                    thief,
                    crypto,
                )
            }
        }
    }

    pub fn committees(&self) -> u32 {
        self.committees
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn genesis_fills_every_shard() {
        let mut c = SimCrypto::new(3);
        let (w, state) = Workload::genesis(&mut c, 3, 4, 5, 2, 100, 0.0);
        assert_eq!(w.users().len(), 20);
        for k in 0..4 {
            assert_eq!(state.shard_view(k).len(), 10);
        }
        assert_eq!(state.total_value(), 4000);
    }

    #[test]
    fn generated_txs_are_valid_and_disjoint() {
        let mut c = SimCrypto::new(3);
        let (mut w, state) = Workload::genesis(&mut c, 3, 2, 4, 3, 100, 0.0);
        let a = w.generate(&state, 0, 5, &c);
        let b = w.generate(&state, 0, 50, &c);
        assert_eq!(a.len(), 5);
        assert_eq!(b.len(), 7);
        let mut inputs = BTreeSet::new();
        for s in a.iter().chain(&b) {
            assert!(s.valid);
            assert_eq!(state.input_shard(&s.tx), Some(0));
            assert!(inputs.insert(s.tx.inputs[0]));
        }
    }

    #[test]
    fn invalid_rate_one_gives_only_invalid() {
        let mut c = SimCrypto::new(4);
        let (mut w, state) = Workload::genesis(&mut c, 4, 2, 4, 3, 100, 1.0);
        let subs = w.generate(&state, 1, 10, &c);
        assert!(!subs.is_empty());
        assert!(subs.iter().all(|s| !s.valid));
    }
}
