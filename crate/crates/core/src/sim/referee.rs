//! Referee committee duties: registration, the commitment table, collecting
//! decisions and assembling the block.

use std::collections::{BTreeMap, BTreeSet};

use crate::committee::{
    next_randomness, select_key_members, verify_ticket, Candidate, CommitmentAck, PowTicket, Replacement,
    SignedMemberList,
};
use crate::consensus::{ConsensusResult, InstanceId, Proposal};
use crate::crypto::Digest;
use crate::ledger::{pack_transactions, Block, CandidateSet, CrossResult, Transaction, TxDecision};
use crate::net::NodeId;
use crate::reputation::{punish_leader, update_reputation};

use super::message::{BlockEvidence, BlockProposal, CommitmentTable, Msg, Phase, SimPayload, TableEntry};
use super::node::{Node, Referee};
use super::world::{selection_params, World};

impl World {
    pub(super) fn on_register(&mut self, node: &mut Node, from: NodeId, t: PowTicket) {
        let ok =
            t.key == self.key_of(from) && verify_ticket(&t, self.round + 1, &self.randomness, &self.difficulty).is_ok();
        if let Some(rf) = node.referee.as_mut() {
            if ok {
                rf.tickets.insert(from, t);
            }
        }
    }

    // ---- commitment table -----------------------------------------------

    fn entry_for(
        &self,
        k: u32,
        leader: NodeId,
        key: crate::crypto::PublicKey,
        list: Option<&SignedMemberList>,
    ) -> TableEntry {
        let Some(list) = list else {
            return TableEntry {
                committee: k,
                leader,
                leader_key: key,
                digest: Digest::ZERO,
                valid: false,
            };
        };
        let digest = list.members.digest();
        let participants: BTreeSet<NodeId> = self.participants.iter().copied().collect();
        let known = list
            .members
            .iter()
            .all(|(pk, id)| self.by_key.get(pk) == Some(id) && participants.contains(id));
        TableEntry {
            committee: k,
            leader,
            leader_key: key,
            digest,
            valid: known
                && list.committee == k
                && list.round == self.round
                && list.claimed_digest == digest
                && list.verify(&self.crypto, &key),
        }
    }

    pub(super) fn propose_table(&mut self, node: &mut Node) {
        let Some(rf) = node.referee.as_ref() else { return };
        if node.id != rf.proposer {
            return;
        }
        let due = 8 * self.cfg.delta + self.cfg.gamma;
        let mut entries = Vec::new();
        for (k, &(leader, key)) in rf.current.iter().enumerate() {
            let k = k as u32;
            if rf.tabled.contains(&(k, key)) || rf.replacing.contains(&k) {
                continue;
            }
            let semi = rf.semis.get(&(k, key));
            if semi.is_none() && self.now() < rf.appointed[k as usize] + due {
                continue;
            }
            entries.push(self.entry_for(k, leader, key, semi));
        }
        let rf = node.referee.as_mut().expect("referee");
        rf.first_table = true;
        rf.table_armed = false;
        if entries.is_empty() {
            return;
        }
        for e in &entries {
            rf.tabled.insert((e.committee, e.leader_key));
        }
        let id = InstanceId {
            leader: node.id,
            round: self.round,
            seq: rf.next_seq(),
        };
        let table = CommitmentTable {
            round: self.round,
            entries,
        };
        self.lead_instance(node, id, Phase::Commitment, SimPayload::Table(table));
    }

    pub(super) fn table_ok(&self, node: &Node, t: &CommitmentTable) -> bool {
        let Some(rf) = node.referee.as_ref() else { return false };
        t.round == self.round
            && t.entries.iter().all(|e| {
                let Some(&(leader, key)) = rf.current.get(e.committee as usize) else {
                    return false;
                };
                e.leader == leader
                    && e.leader_key == key
                    && *e == self.entry_for(e.committee, leader, key, rf.semis.get(&(e.committee, key)))
            })
    }

    fn apply_table(&mut self, node: &mut Node, t: CommitmentTable) {
        for e in t.entries {
            let rf = node.referee.as_mut().expect("referee");
            rf.tabled.insert((e.committee, e.leader_key));
            if rf.current[e.committee as usize].1 != e.leader_key {
                continue;
            }
            if e.valid {
                let Some(list) = rf.semis.get(&(e.committee, e.leader_key)) else {
                    continue;
                };
                rf.rosters.insert((e.committee, e.leader_key), list.members.clone());
                let ack = CommitmentAck::sign(
                    e.committee,
                    self.round,
                    e.leader_key,
                    e.digest,
                    node.id,
                    &self.crypto,
                    &node.keys.secret,
                );
                let targets = self.all_key_members();
                self.send_all(node.id, &targets, &Msg::CommitAck(ack));
            } else {
                let kind = if e.digest == Digest::ZERO {
                    "missing-commitment"
                } else {
                    "invalid-commitment"
                };
                if let Some(rep) = self.successor(rf, e.committee) {
                    self.evict(node, rep, kind);
                }
            }
        }
    }

    /// The first partial-set member of `k` that has not led it this round.
    fn successor(&self, rf: &Referee, k: u32) -> Option<Replacement> {
        let (old, _) = rf.current[k as usize];
        let new = self
            .partial_set(k)
            .iter()
            .copied()
            .find(|id| *id != old && !rf.evicted.iter().any(|(_, e, _)| e == id))?;
        Some(Replacement {
            committee: k,
            round: self.round,
            old_leader: old,
            new_leader: new,
            new_key: self.key_of(new),
        })
    }

    // ---- agreed referee outcomes ----------------------------------------

    pub(super) fn apply_referee_decision(&mut self, node: &mut Node, result: ConsensusResult<SimPayload>) {
        let Some(rf) = node.referee.as_mut() else { return };
        if !rf.applied.insert(result.digest) {
            return;
        }
        let cert = result.certificate();
        match result.payload {
            SimPayload::Table(t) => self.apply_table(node, t),
            SimPayload::Replace(r) => {
                let kind = r.prosecution.accusation.witness.evidence.kind();
                self.evict(node, r.replacement, kind);
            }
            SimPayload::Block(b) => {
                let proposer = rf.proposer;
                let block = b.block.clone();
                rf.block = Some(*b);
                if node.id == proposer {
                    let all: Vec<NodeId> = (0..self.cfg.n as u32).map(NodeId).collect();
                    self.send_all(node.id, &all, &Msg::BlockRelease(Box::new(block), Box::new(cert)));
                }
            }
            _ => {}
        }
    }

    pub(super) fn on_referee_decided(&mut self, node: &mut Node, _phase: Phase, result: ConsensusResult<SimPayload>) {
        let Some(rf) = node.referee.as_ref() else { return };
        if result.id.leader != rf.proposer || result.id.round != self.round || !result.verify(&self.crypto, &rf.roster)
        {
            return;
        }
        self.apply_referee_decision(node, result);
    }

    pub(super) fn on_decision(&mut self, node: &mut Node, from: NodeId, d: TxDecision) {
        let Some(rf) = node.referee.as_mut() else { return };
        let k = d.payload.committee;
        let Some(&(leader, key)) = rf.current.get(k as usize) else {
            return;
        };
        if from != leader || d.list.list.round != self.round {
            return;
        }
        let Some(members) = rf.rosters.get(&(k, key)) else {
            return;
        };
        if d.verify(&self.crypto, &members.roster(), &key) {
            rf.decisions.insert(k, (from, d));
        }
    }

    // ---- block ----------------------------------------------------------

    pub(super) fn propose_block(&mut self, node: &mut Node) {
        let Some(rf) = node.referee.as_ref() else { return };
        if node.id != rf.proposer {
            return;
        }
        let evidence = BlockEvidence {
            decisions: rf.decisions.values().cloned().collect(),
            cross: rf.cross.values().cloned().collect(),
            tickets: rf.tickets.iter().map(|(id, t)| (*id, *t)).collect(),
            reveals: rf.reveals.iter().map(|(id, r)| (*id, *r)).collect(),
            evicted: rf.evicted.iter().map(|(k, id, _)| (*k, *id)).collect(),
        };
        let Some(block) = self.assemble(rf, &evidence) else {
            return;
        };
        let rf = node.referee.as_mut().expect("referee");
        let id = InstanceId {
            leader: node.id,
            round: self.round,
            seq: rf.next_seq(),
        };
        let payload = SimPayload::Block(Box::new(BlockProposal { block, evidence }));
        self.lead_instance(node, id, Phase::Block, payload);
    }

    /// Derives the block from certified evidence. Every referee member runs
    /// this on the proposer's evidence and endorses only an identical block.
    fn assemble(&self, rf: &Referee, ev: &BlockEvidence) -> Option<Block> {
        let m = self.cfg.m;
        let sets: Vec<CandidateSet> = ev
            .decisions
            .iter()
            .map(|(_, d)| CandidateSet {
                committee: d.payload.committee,
                txs: d.decided_txs().cloned().collect(),
            })
            .collect();
        let legs_complete = |tx: &Transaction, k: u32| {
            let id = tx.id();
            tx.foreign_output_shards(k, m).iter().all(|&j| {
                ev.cross.iter().any(|c| {
                    let f = &c.accept.forward;
                    f.source == k && f.dest == j && f.list.contains(&id)
                })
            })
        };
        let out = pack_transactions(&sets, legs_complete, &self.state, &self.crypto, self.cfg.block_cap);

        let reveals: BTreeMap<NodeId, Digest> = ev.reveals.iter().copied().collect();
        let (next_r, _) = next_randomness(self.round + 1, &rf.commits, &reveals);

        let participants: Vec<NodeId> = ev
            .tickets
            .iter()
            .filter(|(id, t)| {
                t.key == self.key_of(*id)
                    && verify_ticket(t, self.round + 1, &self.randomness, &self.difficulty).is_ok()
            })
            .map(|(id, _)| *id)
            .collect();

        let mut table = self.reputations.clone();
        for (_, d) in &ev.decisions {
            update_reputation(&mut table, &d.payload.scores, true).ok()?;
        }
        for (_, id) in &ev.evicted {
            if let Some(w) = table.get_mut(id) {
                *w = punish_leader(*w);
            }
        }

        let candidates: Vec<Candidate> = participants
            .iter()
            .map(|id| Candidate {
                id: *id,
                key: self.key_of(*id),
                reputation: table.get(id).copied().unwrap_or(0.0),
            })
            .collect();
        let next = select_key_members(
            &candidates,
            &self.randomness,
            selection_params(&self.cfg, self.round + 1),
        )
        .ok()?;
        Some(Block {
            round: self.round,
            tx_sets: out.tx_sets(),
            fees: out.fees(),
            txs: out.packed.into_iter().map(|(_, t, _)| t).collect(),
            next_randomness: next_r.value,
            participants,
            reputations: table.into_iter().collect(),
            next,
            referee: self.assignment.referee.clone(),
        })
    }

    pub(super) fn block_ok(&self, node: &Node, bp: &BlockProposal) -> bool {
        let Some(rf) = node.referee.as_ref() else { return false };
        let ev = &bp.evidence;
        let mut seen = BTreeSet::new();
        let decisions_ok = ev.decisions.iter().all(|(leader, d)| {
            let k = d.payload.committee;
            let key = self.key_of(*leader);
            seen.insert(k)
                && d.list.list.round == self.round
                && rf
                    .rosters
                    .get(&(k, key))
                    .is_some_and(|members| d.verify(&self.crypto, &members.roster(), &key))
        });
        let cross_ok = ev.cross.iter().all(|c| self.cross_result_ok(rf, c));
        let evicted: BTreeSet<(u32, NodeId)> = rf.evicted.iter().map(|(k, id, _)| (*k, *id)).collect();
        let evicted_ok = ev.evicted.iter().all(|e| evicted.contains(e));
        decisions_ok && cross_ok && evicted_ok && self.assemble(rf, ev).is_some_and(|b| b.digest() == bp.block.digest())
    }

    pub(super) fn cross_result_ok(&self, rf: &Referee, c: &CrossResult) -> bool {
        let dest = c.accept.forward.dest;
        c.accept.forward.round == self.round
            && rf
                .rosters
                .iter()
                .filter(|((k, _), _)| *k == dest)
                .any(|(_, members)| c.verify(&self.crypto, &members.roster()))
    }
}
