use std::collections::BTreeSet;

use crate::codec::Encoder;
use crate::committee::KeyAssignment;
use crate::consensus::Proposal;
use crate::crypto::{CryptoProvider, Digest};
use crate::net::NodeId;

use super::tx::{Transaction, TxId};
use super::utxo::UtxoSet;

/// Output of a round.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub round: u64,
    /// Packed transaction ids grouped by the committee that decided them.
    pub tx_sets: Vec<(u32, Vec<TxId>)>,
    pub txs: Vec<Transaction>,
    pub fees: u64,
    pub next_randomness: Digest,
    /// S^{r+1}: registered participants of the next round.
    pub participants: Vec<NodeId>,
    /// W^{r+1}, ordered by node id.
    pub reputations: Vec<(NodeId, f64)>,
    pub next: KeyAssignment,
    /// The referee committee that produced this block.
    pub referee: Vec<NodeId>,
}

impl Proposal for Block {
    fn encode(&self) -> Vec<u8> {
        let mut e = Encoder::new("BLOCK");
        e.u64(self.round).len(self.tx_sets.len());
        for (k, ids) in &self.tx_sets {
            e.u32(*k).len(ids.len());
            for id in ids {
                e.digest(id);
            }
        }
        e.len(self.txs.len());
        for t in &self.txs {
            t.encode_into(&mut e);
        }
        e.u64(self.fees)
            .digest(&self.next_randomness)
            .len(self.participants.len());
        for p in &self.participants {
            e.u32(p.0);
        }
        e.len(self.reputations.len());
        for (id, w) in &self.reputations {
            e.u32(id.0).f64(*w);
        }
        e.u64(self.next.round).len(self.next.leaders.len());
        for (l, p) in self.next.leaders.iter().zip(&self.next.partial) {
            e.u32(l.0).len(p.len());
            for x in p {
                e.u32(x.0);
            }
        }
        e.len(self.next.referee.len());
        for r in &self.next.referee {
            e.u32(r.0);
        }
        e.len(self.referee.len());
        for r in &self.referee {
            e.u32(r.0);
        }
        e.into_bytes()
    }
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl Block {
    /// One tab-separated line for the chain dump.
    pub fn dump_line(&self) -> String {
        format!(
            "block\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.round,
            self.digest(),
            self.txs.len(),
            self.fees,
            join(self.txs.iter().map(|t| t.id().to_hex())),
            self.next_randomness,
            join(&self.next.leaders),
            join(&self.referee),
        )
    }
}

/// Decided transactions of one committee, ready for packing.
#[derive(Clone, Debug)]
pub struct CandidateSet {
    pub committee: u32,
    pub txs: Vec<Transaction>,
}

#[derive(Clone, Debug, Default)]
pub struct PackOutcome {
    pub packed: Vec<(u32, Transaction, u64)>,
    /// Valid but left out: cross legs missing or the block cap reached.
    pub remaining: Vec<Transaction>,
    /// Failed validation against the pre-block state or lost a conflict.
    pub rejected: Vec<TxId>,
}

impl PackOutcome {
    pub fn fees(&self) -> u64 {
        self.packed.iter().map(|(_, _, f)| f).sum()
    }

    pub fn tx_sets(&self) -> Vec<(u32, Vec<TxId>)> {
        let mut out: Vec<(u32, Vec<TxId>)> = Vec::new();
        for (k, t, _) in &self.packed {
            match out.last_mut() {
                Some((last, ids)) if last == k => ids.push(t.id()),
                _ => out.push((*k, vec![t.id()])),
            }
        }
        out
    }
}

/// The referee's packing step. Sets are visited in committee order, so on
/// conflicting inputs the lower committee id wins; a tx reported twice is
/// packed once. `legs_complete(tx, committee)` says whether every foreign
/// output shard has accepted the tx.
pub fn pack_transactions(
    sets: &[CandidateSet],
    legs_complete: impl Fn(&Transaction, u32) -> bool,
    state: &UtxoSet,
    crypto: &dyn CryptoProvider,
    cap: Option<usize>,
) -> PackOutcome {
    let mut sorted: Vec<&CandidateSet> = sets.iter().collect();
    sorted.sort_by_key(|s| s.committee);
    let mut out = PackOutcome::default();
    let mut spent = BTreeSet::new();
    let mut seen = BTreeSet::new();
    for set in sorted {
        for tx in &set.txs {
            let id = tx.id();
            if !seen.insert(id) {
                continue;
            }
            let fee = match state.check(tx, crypto) {
                Ok(f) if state.input_shard(tx) == Some(set.committee) => f,
                _ => {
                    out.rejected.push(id);
                    continue;
                }
            };
            if tx.inputs.iter().any(|i| spent.contains(i)) {
                out.rejected.push(id);
                continue;
            }
            if !legs_complete(tx, set.committee) || cap.is_some_and(|c| out.packed.len() >= c) {
                out.remaining.push(tx.clone());
                continue;
            }
            spent.extend(tx.inputs.iter().copied());
            out.packed.push((set.committee, tx.clone(), fee));
        }
    }
    out
}

/// Applies a released block to a state: spent inputs leave, outputs enter.
pub fn apply_block(state: &mut UtxoSet, block: &Block, committees: u32) {
    for tx in &block.txs {
        state.apply(tx, committees);
    }
}
