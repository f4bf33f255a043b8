//! Committee-side handlers: configuration, the semi-commitment exchange,
//! intra-committee agreement, cross-shard legs and the consensus plumbing
//! shared by every agreement instance.

use rand::Rng;

use crate::adversary::{adversary_rng, Strategy};
use crate::committee::{
    verify_commitment_as_partial, AgreedCommitment, ClaimAck, CommitmentAck, Role, SignedMemberList, SortitionClaim,
};
use crate::consensus::{Action, ConsensusInstance, ConsensusMsg, ConsensusResult, InstanceId, Proposal, ProposeMsg};
use crate::crypto::{hash_parts, Digest};
use crate::ledger::{
    build_intra_payload, check_intra_payload, CrossAccept, CrossList, CrossResult, SignedForward, SignedTxList,
    Transaction, TxDecision, TxList, VoteVector,
};
use crate::net::NodeId;
use crate::reputation::Vote;
use crate::witness::{Evidence, Witness};

use super::message::{Msg, Phase, SimPayload};
use super::node::Node;
use super::world::{Timer, World};

fn is_referee_phase(phase: Phase) -> bool {
    matches!(phase, Phase::Commitment | Phase::Recovery | Phase::Block)
}

impl World {
    // ---- configuration -------------------------------------------------

    pub(super) fn on_config(&mut self, node: &mut Node, claim: SortitionClaim) {
        let k = match node.role {
            Role::Leader(k) | Role::PartialSet(k) if k == claim.committee => k,
            _ => return,
        };
        if !self.claim_ok(&claim) {
            return;
        }
        node.local_s.insert(claim.key, claim.address);
        node.proofs.insert(claim.key, claim);
        let all: Vec<SortitionClaim> = node.proofs.values().copied().collect();
        self.send(node.id, claim.address, Msg::MemList(all));
        if matches!(node.role, Role::PartialSet(_)) {
            let leader = node.leaders[k as usize].0;
            self.send(node.id, leader, Msg::ClaimRelay(claim));
        }
    }

    pub(super) fn on_member_claims(&mut self, node: &mut Node, claims: &[SortitionClaim]) {
        let (Role::Common(k), Some(mine)) = (node.role, node.claim) else {
            return;
        };
        for c in claims {
            if c.committee != k || node.local_s.contains_key(&c.key) || !self.claim_ok(c) {
                continue;
            }
            node.local_s.insert(c.key, c.address);
            node.proofs.insert(c.key, *c);
            if c.address != node.id && node.told.insert(c.address) {
                self.send(node.id, c.address, Msg::Member(mine));
            }
        }
    }

    pub(super) fn on_claim_relay(&mut self, node: &mut Node, from: NodeId, claim: SortitionClaim) {
        let Some(lead) = node.lead.as_mut() else { return };
        let k = lead.committee;
        if claim.committee != k || !self.assignment.partial[k as usize].contains(&from) || !self.claim_ok(&claim) {
            return;
        }
        lead.acked.insert(claim.key);
        node.local_s.insert(claim.key, claim.address);
        node.proofs.insert(claim.key, claim);
        let ack = ClaimAck::sign(k, self.round, claim.key, &self.crypto, &node.keys.secret);
        self.send(node.id, from, Msg::Ack(ack));
    }

    pub(super) fn on_claim_ack(&mut self, node: &mut Node, ack: ClaimAck) {
        let Role::PartialSet(k) = node.role else { return };
        if ack.committee == k && ack.round == self.round && ack.verify(&self.crypto, &node.leaders[k as usize].1) {
            node.acks.push(ack);
        }
    }

    // ---- semi-commitment exchange ---------------------------------------

    pub(super) fn send_semi_commitment(&mut self, node: &mut Node) {
        let Some(lead) = node.lead.as_ref() else { return };
        let k = lead.committee;
        let truth = node.local_s.clone();
        let mut shown = truth.clone();
        if self.active(node, Strategy::ForgedMemberList) {
            if let Some(victim) = lead.acked.iter().next().copied() {
                shown.remove(&victim);
            }
        }
        if self.active(node, Strategy::UnregisteredMember) {
            shown.insert(self.sybils[k as usize].public, NodeId(u32::MAX - k));
        }
        let mut committed = shown.clone();
        if self.active(node, Strategy::FalseSemiCommitment) {
            let key_members = self.assignment.key_members(k);
            let victim = shown
                .iter()
                .find(|(_, id)| !self.corrupt.contains(id) && !key_members.contains(id))
                .map(|(key, _)| *key);
            if let Some(v) = victim {
                committed.remove(&v);
            }
        }
        let sign = |list: crate::committee::MemberList, node: &Node| {
            let proofs = node
                .proofs
                .values()
                .filter(|c| list.contains_key(&c.key))
                .copied()
                .collect();
            SignedMemberList::sign(
                k,
                self.round,
                list.digest(),
                list,
                proofs,
                &self.crypto,
                &node.keys.secret,
            )
        };
        let committed = sign(committed, node);
        let shown = sign(shown, node);
        let referee = self.assignment.referee.clone();
        self.send_all(node.id, &referee, &Msg::SemiCom(Box::new(committed.without_proofs())));
        let partials = self.assignment.partial[k as usize].clone();
        self.send_all(node.id, &partials, &Msg::SemiCom(Box::new(shown.clone())));
        let lead = node.lead.as_mut().expect("checked above");
        lead.committed = Some(committed);
        lead.shown = Some(shown);
    }

    pub(super) fn on_semi_com(&mut self, node: &mut Node, from: NodeId, list: SignedMemberList) {
        if list.round != self.round || list.committee >= self.m() {
            return;
        }
        let k = list.committee;
        if let Some(rf) = node.referee.as_mut() {
            let (leader, key) = rf.current[k as usize];
            if from != leader {
                return;
            }
            rf.semis.insert((k, key), list);
            if node.id == rf.proposer && rf.first_table && !rf.table_armed {
                rf.table_armed = true;
                let at = self.now() + self.cfg.gamma;
                self.schedule(at, node.id, Timer::Table);
            }
            return;
        }
        if node.role == Role::PartialSet(k) && node.leaders[k as usize].0 == from {
            node.leader_list = Some(list);
            node.list_checked = false;
            self.check_commitment(node);
        }
    }

    pub(super) fn on_commit_ack(&mut self, node: &mut Node, ack: CommitmentAck) {
        if !node.role.is_key() || ack.round != self.round {
            return;
        }
        if let Some(agreed) = node.collector.add(&ack, &self.crypto, &self.referee_roster) {
            self.on_agreed(node, agreed);
        }
    }

    fn on_agreed(&mut self, node: &mut Node, agreed: AgreedCommitment) {
        let k = agreed.committee;
        if node.committee != Some(k) {
            return;
        }
        if let Some(lead) = node.lead.as_mut() {
            let Some(list) = lead.committed.clone() else { return };
            if lead.final_sent || agreed.leader != node.keys.public || list.members.digest() != agreed.digest {
                return;
            }
            lead.agreed = Some(agreed.clone());
            lead.final_sent = true;
            node.roster = Some((node.id, list.members.roster()));
            let targets: Vec<NodeId> = list.members.addresses().into_iter().filter(|&a| a != node.id).collect();
            let msg = Msg::FinalList(Box::new(list.without_proofs()), Box::new(agreed));
            self.send_all(node.id, &targets, &msg);
            self.send_tx_list(node);
            let inbound = std::mem::take(&mut node.lead.as_mut().expect("leader").inbound);
            for f in inbound {
                self.accept_forward(node, f);
            }
        } else {
            self.check_commitment(node);
        }
    }

    /// Partial-set check of the leader's list against the agreed digest and
    /// the acknowledgements this member holds.
    fn check_commitment(&mut self, node: &mut Node) {
        let Role::PartialSet(k) = node.role else { return };
        if node.list_checked {
            return;
        }
        let (leader, key) = node.leaders[k as usize];
        let (Some(list), Some(agreed)) = (node.leader_list.as_ref(), node.collector.get(k)) else {
            return;
        };
        if agreed.leader != key {
            return;
        }
        node.list_checked = true;
        if let Err(w) = verify_commitment_as_partial(&self.crypto, leader, &key, agreed, &node.acks, list) {
            self.on_witness(node, w);
        }
    }

    pub(super) fn on_final_list(
        &mut self,
        node: &mut Node,
        from: NodeId,
        list: SignedMemberList,
        agreed: AgreedCommitment,
    ) {
        let Some(k) = node.committee else { return };
        let (leader, key) = node.leaders[k as usize];
        if from != leader
            || node.lead.is_some()
            || list.committee != k
            || agreed.committee != k
            || agreed.round != self.round
            || agreed.leader != key
            || list.members.digest() != agreed.digest
            || !list.verify(&self.crypto, &key)
            || !agreed.verify(&self.crypto, &self.referee_roster)
        {
            return;
        }
        node.roster = Some((leader, list.members.roster()));
        if let Some(pending) = node.pending_tx.take() {
            self.on_tx_list(node, from, pending);
        }
    }

    // ---- intra-committee agreement --------------------------------------

    pub(super) fn send_tx_list(&mut self, node: &mut Node) {
        if self.now() < self.t0 + self.cfg.tx_offset() {
            return;
        }
        let Some(lead) = node.lead.as_ref() else { return };
        if !lead.final_sent || lead.tx_list.is_some() {
            return;
        }
        let k = lead.committee;
        let txs: Vec<Transaction> = self.pools[k as usize]
            .iter()
            .take(self.cfg.tx_budget)
            .map(|s| s.tx.clone())
            .collect();
        let list = TxList {
            committee: k,
            round: self.round,
            epoch: lead.epoch,
            txs,
        };
        let signed = SignedTxList::sign(list, &self.crypto, &node.keys.secret);
        let entries = self.tx_votes(node, &signed.list);
        let own = VoteVector::sign(node.id, signed.list.digest(), entries, &self.crypto, &node.keys.secret);
        let targets = node.roster.as_ref().map(|(_, r)| r.others(node.id)).unwrap_or_default();
        self.send_all(node.id, &targets, &Msg::TxList(Box::new(signed.clone())));
        let lead = node.lead.as_mut().expect("leader");
        lead.votes.insert(node.id, own);
        lead.tx_list = Some(signed);
        let epoch = lead.epoch;
        let at = self.now() + 2 * self.cfg.delta;
        self.schedule(at, node.id, Timer::BuildIntra(epoch));
    }

    /// Yes for transactions valid against the pre-round state, in this
    /// shard and not conflicting with an earlier list entry.
    fn tx_votes(&self, node: &Node, list: &TxList) -> Vec<Vote> {
        let mut spent = std::collections::BTreeSet::new();
        let mut out = Vec::with_capacity(list.txs.len());
        for tx in &list.txs {
            let ok = self.state.check(tx, &self.crypto).is_ok()
                && self.state.input_shard(tx) == Some(list.committee)
                && tx.inputs.iter().all(|i| !spent.contains(i));
            if ok {
                spent.extend(tx.inputs.iter().copied());
            }
            out.push(if ok { Vote::Yes } else { Vote::No });
        }
        if self.active(node, Strategy::VoteInverter) {
            for v in out.iter_mut() {
                *v = if *v == Vote::Yes { Vote::No } else { Vote::Yes };
            }
        } else if self.active(node, Strategy::RandomVoter) {
            let mut rng = adversary_rng(self.cfg.seed, node.id, self.round, "vote");
            for v in out.iter_mut() {
                *v = if rng.gen_bool(0.5) { Vote::Yes } else { Vote::No };
            }
        }
        out
    }

    pub(super) fn on_tx_list(&mut self, node: &mut Node, from: NodeId, list: SignedTxList) {
        let Some(k) = node.committee else { return };
        let (leader, key) = node.leaders[k as usize];
        if node.lead.is_some()
            || from != leader
            || list.list.committee != k
            || list.list.round != self.round
            || !list.verify(&self.crypto, &key)
        {
            return;
        }
        if node.roster.as_ref().map(|(l, _)| *l) != Some(leader) {
            node.pending_tx = Some(list);
            return;
        }
        let entries = self.tx_votes(node, &list.list);
        let vote = VoteVector::sign(node.id, list.list.digest(), entries, &self.crypto, &node.keys.secret);
        node.tx_list = Some(list);
        node.my_vote = Some(vote.clone());
        self.send(node.id, leader, Msg::Vote(Box::new(vote)));
    }

    pub(super) fn on_vote(&mut self, node: &mut Node, vote: VoteVector) {
        let Some(lead) = node.lead.as_mut() else { return };
        if lead.tx_list.as_ref().is_some_and(|l| l.list.digest() == vote.list) {
            lead.votes.insert(vote.voter, vote);
        }
    }

    pub(super) fn propose_intra(&mut self, node: &mut Node, epoch: u32) {
        let Some(lead) = node.lead.as_mut() else { return };
        if lead.epoch != epoch || lead.intra.is_some() {
            return;
        }
        let (Some(list), Some((_, roster))) = (lead.tx_list.clone(), node.roster.clone()) else {
            return;
        };
        let payload = build_intra_payload(&list.list, &lead.votes, &roster, &self.crypto);
        let id = InstanceId {
            leader: node.id,
            round: self.round,
            seq: lead.next_seq(),
        };
        lead.intra = Some(id);
        node.intra = Some(id);
        if !self.active(node, Strategy::EquivocatingLeader) {
            self.lead_instance(node, id, Phase::Intra, SimPayload::Intra(payload));
            return;
        }
        let mut other = payload.clone();
        match other.decided.first_mut() {
            Some(d) => *d = !*d,
            None => other.scores[0].1 += 1.0,
        }
        let mut inst = self.instance_for(node, id, Phase::Intra).expect("leader has a roster");
        let Ok(actions) = inst.leader_propose(SimPayload::Intra(payload), self.now(), &self.crypto, &node.keys.secret)
        else {
            return;
        };
        let others = roster.others(node.id);
        let (first, second) = others.split_at(others.len() / 2);
        let twin = ProposeMsg::new(id, SimPayload::Intra(other), &self.crypto, &node.keys.secret);
        let twin = Msg::Cons(Phase::Intra, Box::new(ConsensusMsg::Propose(twin)));
        node.instances.insert(id, (Phase::Intra, inst));
        let mut rest = Vec::new();
        for a in actions {
            match a {
                Action::Broadcast(m) => self.send_all(node.id, first, &Msg::Cons(Phase::Intra, Box::new(m))),
                other => rest.push(other),
            }
        }
        self.send_all(node.id, second, &twin);
        self.dispatch(node, id, rest);
    }

    // ---- consensus plumbing ---------------------------------------------

    fn instance_for(&self, node: &Node, id: InstanceId, phase: Phase) -> Option<ConsensusInstance<SimPayload>> {
        let (roster, key) = if is_referee_phase(phase) {
            let rf = node.referee.as_ref()?;
            if id.leader != rf.proposer {
                return None;
            }
            (rf.roster.clone(), self.key_of(rf.proposer))
        } else {
            let k = node.committee?;
            let (leader, key) = node.leaders[k as usize];
            let (owner, roster) = node.roster.as_ref()?;
            if id.leader != leader || *owner != leader {
                return None;
            }
            (roster.clone(), key)
        };
        if id.round != self.round || !roster.contains(node.id) {
            return None;
        }
        Some(ConsensusInstance::new(
            id,
            node.id,
            roster,
            key,
            self.now(),
            self.cfg.delta,
            6 * self.cfg.delta,
        ))
    }

    /// Starts an instance this node leads and proposes `payload` in it.
    pub(super) fn lead_instance(&mut self, node: &mut Node, id: InstanceId, phase: Phase, payload: SimPayload) {
        let Some(mut inst) = self.instance_for(node, id, phase) else {
            return;
        };
        let actions = inst
            .leader_propose(payload, self.now(), &self.crypto, &node.keys.secret)
            .unwrap_or_default();
        node.instances.insert(id, (phase, inst));
        self.dispatch(node, id, actions);
    }

    pub(super) fn on_consensus(&mut self, node: &mut Node, _from: NodeId, phase: Phase, msg: ConsensusMsg<SimPayload>) {
        let id = msg.instance();
        if node.corrupt && !is_referee_phase(phase) {
            match &msg {
                ConsensusMsg::Propose(p) => self.blackboard.record_header(&p.header),
                ConsensusMsg::Echo(e) => self.blackboard.record_header(&e.relay),
                ConsensusMsg::Confirm(_) => {}
            }
        }
        if !node.instances.contains_key(&id) {
            let Some(inst) = self.instance_for(node, id, phase) else {
                return;
            };
            node.instances.insert(id, (phase, inst));
        }
        let now = self.now();
        let secret = node.keys.secret;
        let actions = match msg {
            ConsensusMsg::Propose(p) => {
                if let SimPayload::Accept(a) = &p.payload {
                    node.accept_seen.insert(a.forward.list.digest());
                }
                if let SimPayload::Intra(_) = &p.payload {
                    if node.intra.is_none() {
                        node.intra = Some(id);
                    }
                }
                let valid = self.validate_payload(node, &p.payload);
                let (_, inst) = node.instances.get_mut(&id).expect("inserted above");
                inst.on_propose(p, now, &self.crypto, &secret, |_| valid)
                    .unwrap_or_default()
            }
            ConsensusMsg::Echo(e) => {
                let (_, inst) = node.instances.get_mut(&id).expect("inserted above");
                inst.on_echo(e, now, &self.crypto, &secret)
            }
            ConsensusMsg::Confirm(c) => {
                let (_, inst) = node.instances.get_mut(&id).expect("inserted above");
                inst.on_confirm(c, now, &self.crypto)
            }
        };
        self.dispatch(node, id, actions);
    }

    pub(super) fn poll_instance(&mut self, node: &mut Node, id: InstanceId) {
        let now = self.now();
        let secret = node.keys.secret;
        let Some((_, inst)) = node.instances.get_mut(&id) else {
            return;
        };
        let actions = inst.poll(now, &self.crypto, &secret);
        self.dispatch(node, id, actions);
    }

    fn dispatch(&mut self, node: &mut Node, id: InstanceId, actions: Vec<Action<SimPayload>>) {
        let Some((phase, inst)) = node.instances.get(&id) else {
            return;
        };
        let phase = *phase;
        let targets = inst.roster().others(node.id);
        for a in actions {
            match a {
                Action::Broadcast(m) => self.send_all(node.id, &targets, &Msg::Cons(phase, Box::new(m))),
                Action::Send(to, m) => self.send(node.id, to, Msg::Cons(phase, Box::new(m))),
                Action::Decided(r) => self.on_decided(node, phase, r),
                Action::Witness(w) => {
                    if !is_referee_phase(phase) {
                        self.on_witness(node, w);
                    }
                }
                Action::NoQuorum(_) => self.log.no_quorum += 1,
            }
        }
        if let Some((_, inst)) = node.instances.get(&id) {
            if let Some(t) = inst.wake_at(self.now()) {
                if node.wakes.insert((id, t)) {
                    self.schedule(t, node.id, Timer::Wake(id));
                }
            }
        }
    }

    fn validate_payload(&self, node: &Node, payload: &SimPayload) -> bool {
        match payload {
            SimPayload::Table(t) => self.table_ok(node, t),
            SimPayload::Replace(r) => self.replace_ok(node, r),
            SimPayload::Block(b) => self.block_ok(node, b),
            SimPayload::Intra(p) => {
                let (Some(list), Some((_, roster))) = (node.tx_list.as_ref(), node.roster.as_ref()) else {
                    return false;
                };
                p.list == list.list.digest()
                    && check_intra_payload(p, &list.list, roster, &self.crypto, node.my_vote.as_ref())
            }
            SimPayload::Cross(l) => match self.expected_cross(node, l.dest) {
                Some(expected) => {
                    l.source == node.committee.unwrap_or(u32::MAX) && l.round == self.round && *l == expected
                }
                None => false,
            },
            SimPayload::Accept(a) => node
                .committee
                .is_some_and(|k| a.check(&self.crypto, &self.referee_roster, k, self.round, self.m())),
        }
    }

    /// The cross-shard list this member expects for `dest`, derived from the
    /// intra-committee payload it adopted.
    fn expected_cross(&self, node: &Node, dest: u32) -> Option<CrossList> {
        let k = node.committee?;
        let id = node.intra?;
        let (_, inst) = node.instances.get(&id)?;
        let SimPayload::Intra(p) = inst.payload()? else {
            return None;
        };
        let list = node
            .tx_list
            .as_ref()
            .or(node.lead.as_ref().and_then(|l| l.tx_list.as_ref()))?;
        if p.list != list.list.digest() || dest == k {
            return None;
        }
        let txs = list
            .list
            .txs
            .iter()
            .zip(&p.decided)
            .filter(|(t, d)| **d && t.foreign_output_shards(k, self.m()).contains(&dest))
            .map(|(t, _)| t.clone())
            .collect();
        Some(CrossList {
            source: k,
            dest,
            round: self.round,
            txs,
        })
    }

    fn on_decided(&mut self, node: &mut Node, phase: Phase, result: ConsensusResult<SimPayload>) {
        if is_referee_phase(phase) {
            let targets = self.referee_roster.others(node.id);
            self.send_all(node.id, &targets, &Msg::Decided(phase, Box::new(result.clone())));
            self.apply_referee_decision(node, result);
            return;
        }
        let cert = result.certificate();
        match result.payload {
            SimPayload::Intra(payload) => {
                let Some(lead) = node.lead.as_mut() else { return };
                let Some(list) = lead.tx_list.clone() else { return };
                let decision = TxDecision { list, payload, cert };
                lead.decision = Some(decision.clone());
                let referee = self.assignment.referee.clone();
                self.send_all(node.id, &referee, &Msg::Decision(Box::new(decision.clone())));
                self.start_cross(node, &decision);
            }
            SimPayload::Cross(list) => self.forward_cross(node, list, cert),
            SimPayload::Accept(accept) => {
                let source_leader = accept.forward.sender;
                let result = CrossResult { accept: *accept, cert };
                let msg = Msg::CrossDone(Box::new(result));
                self.send(node.id, source_leader, msg.clone());
                let referee = self.assignment.referee.clone();
                self.send_all(node.id, &referee, &msg);
            }
            _ => {}
        }
    }

    // ---- cross-shard legs -----------------------------------------------

    fn start_cross(&mut self, node: &mut Node, decision: &TxDecision) {
        let k = decision.payload.committee;
        let m = self.m();
        let decided: Vec<&Transaction> = decision.decided_txs().collect();
        let dests: std::collections::BTreeSet<u32> =
            decided.iter().flat_map(|t| t.foreign_output_shards(k, m)).collect();
        for j in dests {
            let list = CrossList {
                source: k,
                dest: j,
                round: self.round,
                txs: decided
                    .iter()
                    .filter(|t| t.foreign_output_shards(k, m).contains(&j))
                    .map(|t| (*t).clone())
                    .collect(),
            };
            let Some(lead) = node.lead.as_mut() else { return };
            let id = InstanceId {
                leader: node.id,
                round: self.round,
                seq: lead.next_seq(),
            };
            lead.cross.insert(id, list.clone());
            self.lead_instance(node, id, Phase::Cross, SimPayload::Cross(list));
        }
    }

    fn forward_cross(&mut self, node: &mut Node, list: CrossList, cert: crate::consensus::Certificate) {
        let Some(members) = node
            .lead
            .as_ref()
            .and_then(|l| l.committed.as_ref())
            .map(|l| l.members.clone())
        else {
            return;
        };
        let (k, j) = (list.source, list.dest);
        let mut sent = list;
        if self.active(node, Strategy::ConcealingCrossShardLeader) && !sent.txs.is_empty() {
            sent.txs.remove(0);
        }
        if self.active(node, Strategy::ImitatingCrossShardLeader) {
            if let Some(mut fake) = sent.txs.first().cloned() {
                fake.outputs[0].amount += 1;
                sent.txs.push(fake);
            }
        }
        let forward = SignedForward::sign(sent, cert, members, node.id, &self.crypto, &node.keys.secret);
        let msg = Msg::Forward(Box::new(forward));
        let mut targets: Vec<NodeId> = self.assignment.partial[j as usize].clone();
        if !self.active(node, Strategy::SilentCrossShardLeader) {
            targets.push(node.leaders[j as usize].0);
            targets.extend(self.assignment.partial[k as usize].iter().copied());
        }
        targets.sort();
        targets.dedup();
        self.send_all(node.id, &targets, &msg);
    }

    pub(super) fn on_forward(&mut self, node: &mut Node, f: SignedForward) {
        let Some(k) = node.committee else { return };
        if !node.role.is_key() && node.lead.is_none() {
            return;
        }
        let seen = hash_parts(&[&f.list.digest().0, &f.sig.bytes.0]);
        let Some(agreed) = node.collector.get(f.source).cloned() else {
            return;
        };
        if f.round != self.round
            || agreed.leader != self.key_of(f.sender)
            || !f.verify_signature(&self.crypto, &agreed.leader)
        {
            return;
        }
        if !f.backed_by(&self.crypto, &agreed.digest) {
            if node.forwards_seen.insert(seen) {
                let w = Witness {
                    accused: f.sender,
                    evidence: Evidence::CrossShardForgery {
                        forward: f,
                        source: agreed,
                    },
                };
                self.on_witness(node, w);
            }
            return;
        }
        if f.dest != k {
            return;
        }
        if node.lead.is_some() {
            self.accept_forward(node, f);
        } else if matches!(node.role, Role::PartialSet(_)) && node.forwards_seen.insert(seen) {
            let d = f.list.digest();
            node.fallback.insert(d, f);
            let at = self.now() + 2 * self.cfg.gamma;
            self.schedule(at, node.id, Timer::Fallback(d));
        }
    }

    pub(super) fn accept_forward(&mut self, node: &mut Node, f: SignedForward) {
        let Some(lead) = node.lead.as_mut() else { return };
        if !lead.final_sent {
            lead.inbound.push(f);
            return;
        }
        let d = f.list.digest();
        if !lead.accepting.insert(d) {
            return;
        }
        let Some(source_commitment) = node.collector.get(f.source).cloned() else {
            return;
        };
        let id = InstanceId {
            leader: node.id,
            round: self.round,
            seq: lead.next_seq(),
        };
        node.accept_seen.insert(d);
        let payload = SimPayload::Accept(Box::new(CrossAccept {
            forward: f,
            source_commitment,
        }));
        self.lead_instance(node, id, Phase::Cross, payload);
    }

    pub(super) fn fallback(&mut self, node: &mut Node, d: Digest) {
        if node.accept_seen.contains(&d) {
            return;
        }
        let Some(f) = node.fallback.remove(&d) else { return };
        let Some(k) = node.committee else { return };
        let leader = node.leaders[k as usize].0;
        self.send(node.id, leader, Msg::Forward(Box::new(f)));
    }

    pub(super) fn on_cross_done(&mut self, node: &mut Node, result: CrossResult) {
        let Some(rf) = node.referee.as_ref() else { return };
        if self.cross_result_ok(rf, &result) {
            let rf = node.referee.as_mut().expect("referee");
            rf.cross.insert(result.digest(), result);
        }
    }
}
