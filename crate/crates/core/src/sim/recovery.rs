//! Witness handling, accusation and impeachment, and leader replacement as
//! seen by committee members. The referee side of a replacement lives in
//! `referee.rs`.

use crate::adversary::Strategy;
use crate::committee::{Accusation, ImpeachVote, NewLeaderNotice, Prosecution, Replacement, Role};
use crate::consensus::{InstanceId, ProposeHeader};
use crate::crypto::{hash, Digest};
use crate::net::NodeId;
use crate::witness::{Evidence, Witness};

use super::message::{Msg, Phase, ReplaceProposal, SimPayload};
use super::node::{Lead, Node};
use super::world::{Timer, World};

impl World {
    pub(super) fn on_witness(&mut self, node: &mut Node, w: Witness) {
        let Some(k) = node.leaders.iter().position(|(id, _)| *id == w.accused) else {
            return;
        };
        let key = node.leaders[k].1;
        if !w.verify(&self.crypto, &key, self.round, &self.referee_roster) {
            return;
        }
        if node.corrupt {
            return;
        }
        self.log.witnesses.insert(w.digest());
        if !node.accused.insert(w.accused) {
            return;
        }
        let k = k as u32;
        if node.role == Role::PartialSet(k) {
            self.accuse(node, k, w);
        } else {
            let targets: Vec<NodeId> = self.partial_set(k).iter().copied().filter(|&p| p != node.id).collect();
            self.send_all(node.id, &targets, &Msg::WitnessFwd(Box::new(w)));
        }
    }

    /// Starts a prosecution of the current leader of `k` backed by `w`.
    fn accuse(&mut self, node: &mut Node, k: u32, w: Witness) {
        let (leader, key) = node.leaders[k as usize];
        let d = w.digest();
        if node.prosecutions.contains_key(&d) {
            return;
        }
        let accusation = Accusation::new(k, self.round, leader, key, w, node.id, &self.crypto, &node.keys.secret);
        let own = accusation.impeach(node.id, &self.crypto, &node.keys.secret);
        node.voted.insert(d);
        let targets: Vec<NodeId> = node.committee_peers().into_iter().filter(|&p| p != leader).collect();
        self.send_all(node.id, &targets, &Msg::Accuse(Box::new(accusation.clone())));
        node.prosecutions.insert(
            d,
            Prosecution {
                accusation,
                votes: vec![own],
            },
        );
        let at = self.now() + 2 * self.cfg.delta;
        self.schedule(at, node.id, Timer::Prosecute(d));
    }

    pub(super) fn on_accuse(&mut self, node: &mut Node, a: Accusation) {
        let k = a.committee;
        if node.committee != Some(k) || a.round != self.round || !a.verify_signature(&self.crypto) {
            return;
        }
        let (leader, key) = node.leaders[k as usize];
        let approve = if node.corrupt {
            self.active(node, Strategy::FramingPartialMember)
        } else {
            a.accused == leader
                && a.accused_key == key
                && a.witness.accused == leader
                && self.partial_set(k).contains(&a.prosecutor)
                && a.witness.verify(&self.crypto, &key, self.round, &self.referee_roster)
        };
        let d = a.witness.digest();
        if !approve || !node.voted.insert(d) {
            return;
        }
        if !node.corrupt {
            self.log.witnesses.insert(d);
        }
        let vote = a.impeach(node.id, &self.crypto, &node.keys.secret);
        self.send(node.id, a.prosecutor, Msg::Impeach(d, vote));
    }

    pub(super) fn on_impeach(&mut self, node: &mut Node, d: Digest, vote: ImpeachVote) {
        let Some(p) = node.prosecutions.get_mut(&d) else { return };
        if !p.votes.iter().any(|v| v.voter == vote.voter) {
            p.votes.push(vote);
        }
    }

    pub(super) fn prosecute(&mut self, node: &mut Node, d: Digest) {
        let Some(p) = node.prosecutions.get(&d) else { return };
        let needed = match &node.roster {
            Some((_, r)) => r.quorum(),
            None => node.local_s.len() / 2 + 1,
        };
        if p.votes.len() < needed && !node.corrupt {
            return;
        }
        let msg = Msg::Prosecute(Box::new(p.clone()));
        let referee = self.assignment.referee.clone();
        self.send_all(node.id, &referee, &msg);
    }

    // ---- referee side of a prosecution ---------------------------------

    pub(super) fn on_prosecute(&mut self, node: &mut Node, p: Prosecution) {
        let Some(rf) = node.referee.as_mut() else { return };
        if node.id != rf.proposer {
            return;
        }
        let k = p.accusation.committee;
        if k >= self.cfg.m || rf.replacing.contains(&k) || p.accusation.round != self.round {
            return;
        }
        let d = p.accusation.witness.digest();
        rf.prosecutions.insert(d, p);
        if self.replacement_for(node, d).is_some() {
            node.referee.as_mut().expect("referee").replacing.insert(k);
            self.propose_replace(node, d);
        }
    }

    /// The replacement a prosecution justifies under this referee member's
    /// view of the accused committee.
    fn replacement_for(&self, node: &Node, d: Digest) -> Option<Replacement> {
        let rf = node.referee.as_ref()?;
        let p = rf.prosecutions.get(&d)?;
        self.check_prosecution(node, p)
    }

    fn check_prosecution(&self, node: &Node, p: &Prosecution) -> Option<Replacement> {
        let rf = node.referee.as_ref()?;
        let k = p.accusation.committee;
        let (leader, key) = *rf.current.get(k as usize)?;
        if p.accusation.accused != leader {
            return None;
        }
        let roster = rf.rosters.get(&(k, key))?.roster();
        let partial: Vec<NodeId> = self
            .partial_set(k)
            .iter()
            .copied()
            .filter(|id| !rf.evicted.iter().any(|(_, e, _)| e == id))
            .collect();
        crate::committee::reselect_leader(p, &self.crypto, &roster, &self.referee_roster, &partial, &key).ok()
    }

    pub(super) fn propose_replace(&mut self, node: &mut Node, d: Digest) {
        let Some(replacement) = self.replacement_for(node, d) else {
            return;
        };
        let rf = node.referee.as_mut().expect("referee");
        let prosecution = rf.prosecutions[&d].clone();
        let id = InstanceId {
            leader: node.id,
            round: self.round,
            seq: rf.next_seq(),
        };
        let payload = SimPayload::Replace(Box::new(ReplaceProposal {
            replacement,
            prosecution,
        }));
        self.lead_instance(node, id, Phase::Recovery, payload);
    }

    pub(super) fn replace_ok(&self, node: &Node, r: &ReplaceProposal) -> bool {
        self.check_prosecution(node, &r.prosecution) == Some(r.replacement)
    }

    /// Records an eviction at a referee member and announces the successor.
    pub(super) fn evict(&mut self, node: &mut Node, rep: Replacement, kind: &'static str) {
        let Some(rf) = node.referee.as_mut() else { return };
        let k = rep.committee as usize;
        if rf.current[k].0 != rep.old_leader {
            return;
        }
        rf.current[k] = (rep.new_leader, rep.new_key);
        rf.appointed[k] = self.now();
        rf.evicted.push((rep.committee, rep.old_leader, kind));
        rf.replacing.remove(&rep.committee);
        if node.id == rf.proposer {
            let at = self.now() + 8 * self.cfg.delta + self.cfg.gamma;
            self.schedule(at, node.id, Timer::Table);
            self.log.evictions.push(super::node::Eviction {
                round: self.round,
                committee: rep.committee,
                old: rep.old_leader,
                new: rep.new_leader,
                old_corrupted: self.corrupt.contains(&rep.old_leader),
                kind,
            });
        }
        let notice = NewLeaderNotice::sign(rep, node.id, &self.crypto, &node.keys.secret);
        let targets = self.all_key_members();
        self.send_all(node.id, &targets, &Msg::NewLeader(notice));
    }

    // ---- committee side of a replacement --------------------------------

    pub(super) fn on_new_leader(&mut self, node: &mut Node, n: NewLeaderNotice) {
        if !node.role.is_key() || n.replacement.round != self.round || !n.verify(&self.crypto, &self.referee_roster) {
            return;
        }
        let rep = n.replacement;
        node.notices
            .entry((rep.committee, rep.new_leader))
            .or_default()
            .insert(n.referee, n);
        let quorum = self.referee_roster.quorum();
        loop {
            let current = node.leaders[rep.committee as usize].0;
            let next = node
                .notices
                .iter()
                .filter(|((c, _), m)| *c == rep.committee && m.len() >= quorum)
                .filter_map(|(_, m)| m.values().next().map(|n| n.replacement))
                .find(|r| r.old_leader == current);
            let Some(r) = next else { break };
            self.adopt_leader(node, r);
        }
    }

    /// Common members learn replacements from the new leader, which relays
    /// every certified replacement of the committee this round so that a
    /// chain of evictions can be followed from the original leader.
    pub(super) fn on_new_relay(&mut self, node: &mut Node, notices: Vec<NewLeaderNotice>) {
        let Some(k) = node.committee else { return };
        let mut by_rep: Vec<(Replacement, std::collections::BTreeSet<NodeId>)> = Vec::new();
        for n in &notices {
            let rep = n.replacement;
            if rep.committee != k || rep.round != self.round || !n.verify(&self.crypto, &self.referee_roster) {
                continue;
            }
            match by_rep.iter_mut().find(|(r, _)| *r == rep) {
                Some((_, signers)) => {
                    signers.insert(n.referee);
                }
                None => by_rep.push((rep, [n.referee].into_iter().collect())),
            }
        }
        by_rep.retain(|(_, signers)| signers.len() >= self.referee_roster.quorum());
        loop {
            let current = node.leaders[k as usize].0;
            let Some(pos) = by_rep.iter().position(|(r, _)| r.old_leader == current) else {
                break;
            };
            let (rep, _) = by_rep.remove(pos);
            self.adopt_leader(node, rep);
        }
    }

    fn adopt_leader(&mut self, node: &mut Node, rep: Replacement) {
        let k = rep.committee;
        if node.leaders[k as usize].0 != rep.old_leader {
            return;
        }
        let old_key = node.leaders[k as usize].1;
        node.leaders[k as usize] = (rep.new_leader, rep.new_key);
        if node.id == rep.old_leader {
            node.lead = None;
        }
        if node.committee != Some(k) {
            return;
        }
        node.local_s.remove(&old_key);
        node.roster = None;
        node.leader_list = None;
        node.list_checked = false;
        node.pending_tx = None;
        node.tx_list = None;
        node.my_vote = None;
        node.intra = None;
        node.acks.clear();
        node.epoch += 1;
        if node.id == rep.new_leader {
            node.lead = Some(Lead::new(k, node.epoch));
            let chain: Vec<NewLeaderNotice> = node
                .notices
                .iter()
                .filter(|((c, _), _)| *c == k)
                .flat_map(|(_, m)| m.values().copied())
                .collect();
            let peers = node.committee_peers();
            self.send_all(node.id, &peers, &Msg::NewRelay(chain));
            self.send_semi_commitment(node);
            let at = self.now().max(self.t0 + self.cfg.tx_offset());
            self.schedule(at, node.id, Timer::TxList);
        }
    }

    // ---- framing --------------------------------------------------------

    /// A corrupt partial member tries to get an honest leader evicted with
    /// fabricated evidence.
    pub(super) fn frame(&mut self, node: &mut Node) {
        let Role::PartialSet(k) = node.role else { return };
        let (leader, _) = node.leaders[k as usize];
        if self.corrupt.contains(&leader) {
            return;
        }
        let mut fakes = Vec::new();

        let id = InstanceId {
            leader,
            round: self.round,
            seq: 0,
        };
        let own = |tag: &[u8]| ProposeHeader::sign(id, hash(tag), &self.crypto, &node.keys.secret);
        fakes.push(Witness {
            accused: leader,
            evidence: Evidence::Equivocation {
                first: own(b"frame/a"),
                second: own(b"frame/b"),
            },
        });

        let seen = self.blackboard.headers_of(leader);
        if let Some(first) = seen.first() {
            let mut second = seen.get(1).cloned().unwrap_or_else(|| first.clone());
            second.id = first.id;
            if second.digest == first.digest {
                second.digest = hash(&first.digest.0);
            }
            fakes.push(Witness {
                accused: leader,
                evidence: Evidence::Equivocation {
                    first: first.clone(),
                    second,
                },
            });
        }

        let other = (0..self.cfg.m)
            .filter(|&j| j != k)
            .find_map(|j| node.collector.get(j).cloned());
        if let (Some(list), Some(agreed)) = (node.leader_list.clone(), other) {
            fakes.push(Witness {
                accused: leader,
                evidence: Evidence::CommitmentMismatch {
                    list: list.without_proofs(),
                    agreed,
                },
            });
        }
        for w in fakes {
            self.accuse(node, k, w);
        }
    }
}
