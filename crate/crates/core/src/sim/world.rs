//! The discrete-event driver: round setup, the event loop and round-end
//! bookkeeping. Protocol handlers live in sibling modules.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::adversary::{Blackboard, CorruptionPlan, Strategy};
use crate::codec::Encoder;
use crate::committee::{
    beacon_commitment, beacon_contribution, crypto_sort, genesis_randomness, select_key_members, Candidate,
    KeyAssignment, Role, SelectionParams, SortitionClaim,
};
use crate::consensus::{InstanceId, Roster};
use crate::crypto::{hash, Digest, KeyPair, PublicKey, SimCrypto};
use crate::ledger::{apply_block, Block, Transaction, TxId, UtxoSet};
use crate::net::{DeliveryScheduler, Payload};
use crate::net::{NodeId, Placement, RandomScheduler, SimClock, SimNetwork, Tick, Topology, WorstCaseScheduler};
use crate::reputation::{distribute_rewards, ReputationTable};

use super::config::{RoleTarget, RunConfig, SchedulerKind};
use super::message::Msg;
use super::metrics::{message_rows, MessageRow, ReputationRow, RoundMetrics, Traffic};
use super::node::{Eviction, Lead, Node, Referee};
use super::workload::{Submission, Workload};
use super::SimError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(super) enum Timer {
    Config,
    Register,
    SemiCom,
    Table,
    TxList,
    BuildIntra(u32),
    Wake(InstanceId),
    Fallback(Digest),
    Prosecute(Digest),
    Frame,
    Reveal,
    Block,
}

/// Everything observable about one finished round.
#[derive(Clone, Debug)]
pub struct RoundReport {
    pub metrics: RoundMetrics,
    pub block: Option<Block>,
    pub evictions: Vec<Eviction>,
    pub rewards: BTreeMap<NodeId, f64>,
    pub value_before: u128,
    pub value_after: u128,
    /// Transactions generated this round and whether each was valid.
    pub submitted: Vec<(TxId, bool)>,
    pub packed: Vec<TxId>,
    /// Leader of every committee at round start.
    pub leaders: Vec<NodeId>,
    pub corrupted: BTreeSet<NodeId>,
    /// Committee sizes as fixed by sortition: key members plus common members.
    pub committee_sizes: Vec<usize>,
    /// Final member-list size each honest node ended the round with.
    pub known_sizes: BTreeMap<NodeId, usize>,
    pub send_errors: u64,
    pub no_quorum: usize,
}

#[derive(Debug, Default)]
pub(super) struct RoundLog {
    pub witnesses: BTreeSet<Digest>,
    pub evictions: Vec<Eviction>,
    pub no_quorum: usize,
    pub send_errors: u64,
}

pub(super) struct World {
    pub cfg: RunConfig,
    pub crypto: SimCrypto,
    pub net: SimNetwork<Msg>,
    pub nodes: Vec<Option<Node>>,
    pub keys: Vec<PublicKey>,
    pub by_key: BTreeMap<PublicKey, NodeId>,
    pub timers: BTreeMap<(Tick, u64), (NodeId, Timer)>,
    timer_seq: u64,
    pub round: u64,
    pub t0: Tick,
    pub state: UtxoSet,
    pub pools: Vec<VecDeque<Submission>>,
    workload: Workload,
    pub assignment: KeyAssignment,
    pub randomness: Digest,
    pub participants: Vec<NodeId>,
    pub reputations: ReputationTable,
    pub difficulty: Digest,
    pub referee_roster: Roster,
    plan: CorruptionPlan,
    pub corrupt: BTreeSet<NodeId>,
    pub strategies: BTreeSet<Strategy>,
    pub blackboard: Blackboard,
    pub sybils: Vec<KeyPair>,
    pub roles: BTreeMap<NodeId, Role>,
    round_leaders: Vec<NodeId>,
    sent_before: u64,
    proposer: NodeId,
    pub claims: BTreeMap<NodeId, SortitionClaim>,
    pub traffic: Traffic,
    pub log: RoundLog,
    pub reports: Vec<RoundReport>,
    pub message_rows: Vec<MessageRow>,
    pub reputation_rows: Vec<ReputationRow>,
    pub trace: Vec<String>,
    tracing: bool,
}

fn node_label(id: usize) -> Vec<u8> {
    format!("node/{id}").into_bytes()
}

impl World {
    pub fn new(cfg: RunConfig, tracing: bool) -> Result<World, SimError> {
        cfg.validate()?;
        let mut crypto = SimCrypto::new(cfg.seed);
        let node_keys: Vec<KeyPair> = (0..cfg.n).map(|i| crypto.generate_keypair(&node_label(i))).collect();
        let sybils: Vec<KeyPair> = (0..cfg.m)
            .map(|k| crypto.generate_keypair(format!("sybil/{k}").as_bytes()))
            .collect();
        let (workload, state) = Workload::genesis(
            &mut crypto,
            cfg.seed,
            cfg.m,
            cfg.users_per_shard,
            cfg.utxos_per_user,
            cfg.initial_amount,
            cfg.invalid_rate,
        );
        let keys: Vec<PublicKey> = node_keys.iter().map(|k| k.public).collect();
        let by_key = keys.iter().enumerate().map(|(i, k)| (*k, NodeId(i as u32))).collect();
        let nodes = node_keys
            .into_iter()
            .enumerate()
            .map(|(i, kp)| Some(Node::new(NodeId(i as u32), kp)))
            .collect();
        let randomness = genesis_randomness(cfg.seed).value;
        let reputations: ReputationTable = (0..cfg.n).map(|i| (NodeId(i as u32), 0.0)).collect();
        let participants: Vec<NodeId> = (0..cfg.n as u32).map(NodeId).collect();
        let candidates: Vec<Candidate> = participants
            .iter()
            .map(|id| Candidate {
                id: *id,
                key: keys[id.0 as usize],
                reputation: 0.0,
            })
            .collect();
        let assignment = select_key_members(&candidates, &randomness, selection_params(&cfg, 0))?;
        let scheduler: Box<dyn DeliveryScheduler> = match cfg.scheduler {
            SchedulerKind::Random => Box::new(RandomScheduler::new(cfg.seed)),
            SchedulerKind::WorstCase => Box::new(WorstCaseScheduler),
        };
        let clock = SimClock::new(cfg.delta, cfg.gamma, cfg.round_budget);
        let mut net = SimNetwork::new(clock, Topology::new(), scheduler);
        if tracing {
            net = net.with_trace();
        }
        let plan = corruption_plan(&cfg, &assignment)?;
        let difficulty = Digest::scaled_max(0.5f64.powi(cfg.pow_bits as i32));
        Ok(World {
            strategies: cfg.strategies.iter().copied().collect(),
            cfg,
            crypto,
            net,
            nodes,
            keys,
            by_key,
            timers: BTreeMap::new(),
            timer_seq: 0,
            round: 0,
            t0: 0,
            state,
            pools: Vec::new(),
            workload,
            assignment,
            randomness,
            participants,
            reputations,
            difficulty,
            referee_roster: Roster::default(),
            plan,
            corrupt: BTreeSet::new(),
            blackboard: Blackboard::default(),
            sybils,
            roles: BTreeMap::new(),
            round_leaders: Vec::new(),
            sent_before: 0,
            proposer: NodeId(0),
            claims: BTreeMap::new(),
            traffic: Traffic::default(),
            log: RoundLog::default(),
            reports: Vec::new(),
            message_rows: Vec::new(),
            reputation_rows: Vec::new(),
            trace: Vec::new(),
            tracing,
        })
    }

    pub fn run(&mut self) -> Result<(), SimError> {
        self.pools = vec![VecDeque::new(); self.cfg.m as usize];
        for r in 0..self.cfg.rounds {
            self.round = r;
            self.t0 = r * self.cfg.round_budget;
            self.start_round()?;
            let submitted = self.submit();
            self.event_loop();
            self.finish_round(submitted);
        }
        Ok(())
    }

    pub fn m(&self) -> u32 {
        self.cfg.m
    }

    pub fn now(&self) -> Tick {
        self.net.now()
    }

    pub fn active(&self, node: &Node, s: Strategy) -> bool {
        node.corrupt && self.strategies.contains(&s)
    }

    pub fn key_of(&self, id: NodeId) -> PublicKey {
        self.keys[id.0 as usize]
    }

    pub fn partial_set(&self, k: u32) -> &[NodeId] {
        &self.assignment.partial[k as usize]
    }

    pub fn all_key_members(&self) -> Vec<NodeId> {
        self.assignment.all_key_members()
    }

    pub fn schedule(&mut self, at: Tick, node: NodeId, timer: Timer) {
        self.timer_seq += 1;
        self.timers.insert((at, self.timer_seq), (node, timer));
    }

    pub fn send(&mut self, from: NodeId, to: NodeId, msg: Msg) {
        if from == to {
            return;
        }
        let (phase, units) = (msg.phase(), msg.units());
        let muted = self.net.is_muted(from);
        match self.net.send(from, to, msg) {
            Ok(_) if !muted => self.traffic.sent(from, phase, units),
            Ok(_) => {}
            Err(_) => self.log.send_errors += 1,
        }
    }

    pub fn send_all(&mut self, from: NodeId, targets: &[NodeId], msg: &Msg) {
        for &to in targets {
            self.send(from, to, msg.clone());
        }
    }

    fn start_round(&mut self) -> Result<(), SimError> {
        self.net.clear_pending();
        self.net.advance_to(self.t0);
        self.timers.clear();
        self.log = RoundLog::default();
        self.traffic = Traffic::default();
        self.blackboard.clear();
        self.corrupt = self.plan.corrupt(self.round, self.cfg.n)?;
        self.net.unmute_all();
        if self.strategies.contains(&Strategy::Offline) {
            for id in &self.corrupt {
                self.net.mute(*id);
            }
        }

        let a = self.assignment.clone();
        self.round_leaders = a.leaders.clone();
        let mut roles: BTreeMap<NodeId, Role> = (0..self.cfg.n as u32).map(|i| (NodeId(i), Role::Idle)).collect();
        for (k, l) in a.leaders.iter().enumerate() {
            roles.insert(*l, Role::Leader(k as u32));
        }
        for (k, set) in a.partial.iter().enumerate() {
            for p in set {
                roles.insert(*p, Role::PartialSet(k as u32));
            }
        }
        for r in &a.referee {
            roles.insert(*r, Role::Referee);
        }
        self.claims.clear();
        for id in self.participants.clone() {
            if roles[&id] != Role::Idle {
                continue;
            }
            let keys = self.nodes[id.0 as usize].as_ref().expect("node present").keys;
            let claim = crypto_sort(&self.crypto, &keys, id, self.round, &self.randomness, self.cfg.m);
            roles.insert(id, Role::Common(claim.committee));
            self.claims.insert(id, claim);
        }
        let mut topo = Topology::new();
        for (id, role) in &roles {
            topo.place(
                *id,
                Placement {
                    committee: role.committee(),
                    key_member: role.is_key(),
                    referee: *role == Role::Referee,
                },
            );
        }
        self.net.set_topology(topo);
        self.referee_roster = Roster::new(a.referee.iter().map(|id| (*id, self.key_of(*id))));
        let leaders: Vec<(NodeId, PublicKey)> = a.leaders.iter().map(|l| (*l, self.key_of(*l))).collect();
        // The referee's agreement leader is taken to be honest; the lowest-id
        // uncorrupted member plays it.
        let proposer = a
            .referee
            .iter()
            .copied()
            .filter(|id| !self.corrupt.contains(id))
            .min()
            .unwrap_or(a.referee[0]);
        self.proposer = proposer;

        for (id, role) in &roles {
            let t0 = self.t0;
            let corrupt = self.corrupt.contains(id);
            let mut node = self.nodes[id.0 as usize].take().expect("node present");
            node.reset(*role, role.committee(), corrupt, leaders.clone());
            node.claim = self.claims.get(id).copied();
            if let Some(k) = role.committee() {
                for km in a.key_members(k) {
                    node.local_s.insert(self.key_of(km), km);
                }
                if let Some(c) = node.claim {
                    node.local_s.insert(c.key, c.address);
                    node.proofs.insert(c.key, c);
                }
            }
            if let Role::Leader(k) = role {
                node.lead = Some(Lead::new(*k, 0));
            }
            if *role == Role::Referee {
                let contribution = beacon_contribution(&self.crypto, &node.keys.secret, self.round);
                node.referee = Some(Referee {
                    roster: self.referee_roster.clone(),
                    proposer,
                    seq: 0,
                    current: leaders.clone(),
                    appointed: vec![t0; leaders.len()],
                    semis: BTreeMap::new(),
                    tabled: BTreeSet::new(),
                    table_armed: false,
                    first_table: false,
                    rosters: BTreeMap::new(),
                    evicted: Vec::new(),
                    replacing: BTreeSet::new(),
                    prosecutions: BTreeMap::new(),
                    decisions: BTreeMap::new(),
                    cross: BTreeMap::new(),
                    tickets: BTreeMap::new(),
                    commits: BTreeMap::new(),
                    reveals: BTreeMap::new(),
                    contribution,
                    applied: BTreeSet::new(),
                    block: None,
                });
            }
            self.nodes[id.0 as usize] = Some(node);
        }
        self.roles = roles.clone();

        let (d, g, t0) = (self.cfg.delta, self.cfg.gamma, self.t0);
        for (id, role) in &roles {
            self.schedule(t0 + d, *id, Timer::Register);
            match role {
                Role::Common(_) | Role::Referee => self.schedule(t0, *id, Timer::Config),
                Role::Leader(_) => {
                    self.schedule(t0 + 8 * d, *id, Timer::SemiCom);
                    self.schedule(t0 + self.cfg.tx_offset(), *id, Timer::TxList);
                }
                Role::PartialSet(_) => {
                    if self.corrupt.contains(id) && self.strategies.contains(&Strategy::FramingPartialMember) {
                        self.schedule(t0 + self.cfg.tx_offset() + 8 * d, *id, Timer::Frame);
                    }
                }
                Role::Idle => {}
            }
            if *role == Role::Referee {
                self.schedule(t0 + self.cfg.block_offset() - d, *id, Timer::Reveal);
            }
        }
        self.schedule(t0 + 8 * d + g, proposer, Timer::Table);
        self.schedule(t0 + self.cfg.block_offset(), proposer, Timer::Block);
        Ok(())
    }

    /// Tops every shard's pool up to the per-round budget.
    fn submit(&mut self) -> Vec<(TxId, bool)> {
        let mut out = Vec::new();
        for k in 0..self.cfg.m {
            let want = self.cfg.tx_budget.saturating_sub(self.pools[k as usize].len());
            let subs = self.workload.generate(&self.state, k, want, &self.crypto);
            for s in subs {
                out.push((s.tx.id(), s.valid));
                self.pools[k as usize].push_back(s);
            }
        }
        out
    }

    fn event_loop(&mut self) {
        let end = self.t0 + self.cfg.round_budget;
        loop {
            let next_net = self.net.next_delivery_time();
            let next_timer = self.timers.keys().next().map(|&(t, _)| t);
            match (next_net, next_timer) {
                (Some(a), b) if a < end && b.is_none_or(|b| a <= b) => {
                    for env in self.net.step() {
                        self.traffic.received(env.to, env.payload.phase(), env.payload.units());
                        self.deliver(env.from, env.to, env.payload);
                    }
                }
                (_, Some(b)) if b < end => {
                    let (_, (id, timer)) = self.timers.pop_first().expect("timer present");
                    self.net.advance_to(b);
                    self.with_node(id, |w, node| w.on_timer(node, timer));
                }
                _ => break,
            }
        }
        if self.tracing {
            self.trace.extend(self.net.take_trace());
        }
        self.net.clear_pending();
        self.timers.clear();
    }

    pub fn with_node<R>(&mut self, id: NodeId, f: impl FnOnce(&mut World, &mut Node) -> R) -> R {
        let mut node = self.nodes[id.0 as usize].take().expect("node is not re-entered");
        let out = f(self, &mut node);
        self.nodes[id.0 as usize] = Some(node);
        out
    }

    fn deliver(&mut self, from: NodeId, to: NodeId, msg: Msg) {
        self.with_node(to, |w, node| w.on_message(node, from, msg));
    }

    fn on_timer(&mut self, node: &mut Node, timer: Timer) {
        match timer {
            Timer::Config => self.start_config(node),
            Timer::Register => self.register(node),
            Timer::SemiCom => self.send_semi_commitment(node),
            Timer::Table => self.propose_table(node),
            Timer::TxList => self.send_tx_list(node),
            Timer::BuildIntra(epoch) => self.propose_intra(node, epoch),
            Timer::Wake(id) => self.poll_instance(node, id),
            Timer::Fallback(d) => self.fallback(node, d),
            Timer::Prosecute(d) => self.prosecute(node, d),
            Timer::Frame => self.frame(node),
            Timer::Reveal => self.reveal(node),
            Timer::Block => self.propose_block(node),
        }
    }

    fn on_message(&mut self, node: &mut Node, from: NodeId, msg: Msg) {
        match msg {
            Msg::Register(t) => self.on_register(node, from, t),
            Msg::BeaconCommit(c) => {
                if let Some(rf) = node.referee.as_mut() {
                    rf.commits.insert(from, c);
                }
            }
            Msg::BeaconReveal(c) => {
                if let Some(rf) = node.referee.as_mut() {
                    rf.reveals.insert(from, c);
                }
            }
            Msg::Config(c) => self.on_config(node, c),
            Msg::MemList(cs) => self.on_member_claims(node, &cs),
            Msg::Member(c) => self.on_member_claims(node, &[c]),
            Msg::ClaimRelay(c) => self.on_claim_relay(node, from, c),
            Msg::Ack(a) => self.on_claim_ack(node, a),
            Msg::SemiCom(l) => self.on_semi_com(node, from, *l),
            Msg::CommitAck(a) => self.on_commit_ack(node, a),
            Msg::FinalList(l, a) => self.on_final_list(node, from, *l, *a),
            Msg::Cons(phase, c) => self.on_consensus(node, from, phase, *c),
            Msg::Decided(phase, r) => self.on_referee_decided(node, phase, *r),
            Msg::TxList(l) => self.on_tx_list(node, from, *l),
            Msg::Vote(v) => self.on_vote(node, *v),
            Msg::Decision(d) => self.on_decision(node, from, *d),
            Msg::Forward(f) => self.on_forward(node, *f),
            Msg::CrossDone(r) => self.on_cross_done(node, *r),
            Msg::WitnessFwd(w) => self.on_witness(node, *w),
            Msg::Accuse(a) => self.on_accuse(node, *a),
            Msg::Impeach(d, v) => self.on_impeach(node, d, v),
            Msg::Prosecute(p) => self.on_prosecute(node, *p),
            Msg::NewLeader(n) => self.on_new_leader(node, n),
            Msg::NewRelay(ns) => self.on_new_relay(node, ns),
            Msg::BlockRelease(..) => {}
        }
    }

    fn start_config(&mut self, node: &mut Node) {
        match node.role {
            Role::Common(k) => {
                let Some(claim) = node.claim else { return };
                let targets = self.assignment.key_members(k);
                self.send_all(node.id, &targets, &Msg::Config(claim));
            }
            Role::Referee => {
                let c = beacon_commitment(&node.referee.as_ref().expect("referee state").contribution);
                if let Some(rf) = node.referee.as_mut() {
                    rf.commits.insert(node.id, c);
                }
                let targets = self.referee_roster.others(node.id);
                self.send_all(node.id, &targets, &Msg::BeaconCommit(c));
            }
            _ => {}
        }
    }

    fn register(&mut self, node: &mut Node) {
        let (ticket, _) = crate::committee::register_participation(
            node.keys.public,
            self.round + 1,
            &self.randomness,
            &self.difficulty,
        );
        if let Some(rf) = node.referee.as_mut() {
            rf.tickets.insert(node.id, ticket);
        }
        let targets = self.assignment.referee.clone();
        self.send_all(node.id, &targets, &Msg::Register(ticket));
    }

    fn reveal(&mut self, node: &mut Node) {
        let Some(rf) = node.referee.as_mut() else { return };
        let c = rf.contribution;
        rf.reveals.insert(node.id, c);
        let targets = self.referee_roster.others(node.id);
        self.send_all(node.id, &targets, &Msg::BeaconReveal(c));
    }

    fn finish_round(&mut self, submitted: Vec<(TxId, bool)>) {
        let proposer = self.proposer;
        let released = self.nodes[proposer.0 as usize]
            .as_ref()
            .and_then(|n| n.referee.as_ref())
            .and_then(|r| r.block.clone());
        let block = released.as_ref().map(|p| p.block.clone());
        let value_before = self.state.total_value();
        let committees = self.cfg.m;
        let mut metrics = RoundMetrics {
            round: self.round,
            block: block.is_some(),
            submitted: submitted.len(),
            submitted_valid: submitted.iter().filter(|(_, v)| *v).count(),
            witnesses: self.log.witnesses.len(),
            evictions: self.log.evictions.len(),
            ..RoundMetrics::default()
        };
        let before = self.reputations.clone();
        let mut rewards = BTreeMap::new();
        let mut packed = Vec::new();
        let mut scores: BTreeMap<NodeId, f64> = BTreeMap::new();
        if let Some(b) = &block {
            packed = b.txs.iter().map(Transaction::id).collect();
            metrics.packed = b.txs.len();
            metrics.fees = b.fees;
            metrics.cross = b
                .txs
                .iter()
                .filter(|t| {
                    self.state
                        .input_shard(t)
                        .is_some_and(|k| !t.foreign_output_shards(k, committees).is_empty())
                })
                .count();
            for (_, d) in &released.as_ref().expect("block implies proposal").evidence.decisions {
                for (id, s) in &d.payload.scores {
                    *scores.entry(*id).or_insert(0.0) += s;
                }
            }
            apply_block(&mut self.state, b, committees);
            let next: ReputationTable = b.reputations.iter().copied().collect();
            rewards = distribute_rewards(b.fees as f64, &next, &self.participants).unwrap_or_default();
            metrics.rewards = rewards.values().sum();
            self.reputations = next;
            self.participants = b.participants.clone();
            self.randomness = b.next_randomness;
            self.assignment = b.next.clone();
        }
        let packed_set: BTreeSet<TxId> = packed.iter().copied().collect();
        let mut reserved = BTreeSet::new();
        for (k, pool) in self.pools.iter_mut().enumerate() {
            let mut kept = VecDeque::new();
            for s in pool.drain(..) {
                if packed_set.contains(&s.tx.id()) {
                    continue;
                }
                let ok =
                    self.state.check(&s.tx, &self.crypto).is_ok() && self.state.input_shard(&s.tx) == Some(k as u32);
                if ok {
                    reserved.extend(s.tx.inputs.iter().copied());
                    kept.push_back(s);
                } else {
                    metrics.rejected += 1;
                }
            }
            *pool = kept;
        }
        metrics.remaining = self.pools.iter().map(VecDeque::len).sum();
        self.workload.set_reserved(reserved);

        let mut sizes = vec![0usize; committees as usize];
        let mut corrupt_in = vec![0usize; committees as usize];
        for (id, role) in &self.roles {
            if let Some(k) = role.committee() {
                sizes[k as usize] += 1;
                if self.corrupt.contains(id) {
                    corrupt_in[k as usize] += 1;
                }
            }
        }
        metrics.insecure_committees = (0..committees as usize)
            .filter(|&k| 2 * corrupt_in[k] >= sizes[k] && sizes[k] > 0)
            .count();
        metrics.insecure_partial_sets = self
            .round_start_partials()
            .iter()
            .filter(|set| !set.is_empty() && set.iter().all(|p| self.corrupt.contains(p)))
            .count();
        let sent = self.net.stats().sent;
        metrics.messages = sent - self.sent_before;
        self.sent_before = sent;

        for (id, role) in &self.roles {
            let b = before.get(id).copied().unwrap_or(0.0);
            self.reputation_rows.push(ReputationRow {
                round: self.round,
                node: *id,
                role: role.label(),
                before: b,
                score: scores.get(id).copied().unwrap_or(0.0),
                after: self.reputations.get(id).copied().unwrap_or(b),
                reward: rewards.get(id).copied().unwrap_or(0.0),
            });
        }
        self.message_rows
            .extend(message_rows(self.round, &self.roles, &self.traffic));
        let known_sizes = self
            .nodes
            .iter()
            .flatten()
            .filter(|n| !n.corrupt && n.committee.is_some())
            .map(|n| (n.id, n.roster.as_ref().map_or(0, |(_, r)| r.size())))
            .collect();
        let leaders = self.round_leaders.clone();
        self.reports.push(RoundReport {
            metrics,
            block,
            evictions: self.log.evictions.clone(),
            rewards,
            value_before,
            value_after: self.state.total_value(),
            submitted,
            packed,
            leaders,
            corrupted: self.corrupt.clone(),
            committee_sizes: sizes,
            known_sizes,
            send_errors: self.log.send_errors,
            no_quorum: self.log.no_quorum,
        });
    }

    fn round_start_partials(&self) -> Vec<Vec<NodeId>> {
        let mut sets = vec![Vec::new(); self.cfg.m as usize];
        for (id, role) in &self.roles {
            if let Role::PartialSet(k) = role {
                sets[*k as usize].push(*id);
            }
        }
        sets
    }
}

pub(super) fn selection_params(cfg: &RunConfig, next_round: u64) -> SelectionParams {
    SelectionParams {
        next_round,
        committees: cfg.m,
        partial_size: cfg.lambda,
        referee_target: cfg.referee_target() as f64,
        min_referee: cfg.min_referee,
    }
}

fn corruption_plan(cfg: &RunConfig, genesis: &KeyAssignment) -> Result<CorruptionPlan, SimError> {
    let mut initial = cfg.corrupt.clone();
    for t in &cfg.corrupt_roles {
        let id = match *t {
            RoleTarget::Leader(k) => genesis.leaders[k as usize],
            RoleTarget::Partial(k, i) => genesis.partial[k as usize][i],
        };
        initial.insert(id);
    }
    if cfg.corrupt_random > 0 {
        let mut e = Encoder::new("CORRUPT_PICK");
        e.u64(cfg.seed);
        let mut rng = ChaCha8Rng::from_seed(hash(&e.into_bytes()).0);
        let mut ids: Vec<NodeId> = (0..cfg.n as u32)
            .map(NodeId)
            .filter(|id| !initial.contains(id))
            .collect();
        ids.shuffle(&mut rng);
        initial.extend(ids.into_iter().take(cfg.corrupt_random));
    }
    Ok(CorruptionPlan {
        initial,
        requests: cfg.corrupt_requests.clone(),
    })
}

impl World {
    /// Verifies `claim` for the current round and committee count.
    pub fn claim_ok(&self, claim: &SortitionClaim) -> bool {
        claim.verify(&self.crypto, self.round, &self.randomness, self.cfg.m)
            && self.by_key.get(&claim.key) == Some(&claim.address)
    }
}
