//! Discrete-event message fabric.
//!
//! Three channel classes exist: synchronous links inside a committee (delay at
//! most Δ), synchronous links among key members and between key members and the
//! referee committee (delay at most Γ), and partially synchronous links from the
//! referee committee to everybody else (finite delay, capped at 10Γ here).
//! Any other pair of nodes has no protocol-bearing link.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Simulation time in abstract ticks.
pub type Tick = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChannelClass {
    IntraCommittee,
    KeyLink,
    PartialSync,
}

impl ChannelClass {
    pub fn label(self) -> &'static str {
        match self {
            ChannelClass::IntraCommittee => "intra",
            ChannelClass::KeyLink => "key",
            ChannelClass::PartialSync => "psync",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("no channel from {0} to {1}")]
    NoChannel(NodeId, NodeId),
}

/// Anything carried over the fabric.
pub trait Payload: Clone {
    /// Short message tag used in traces and counters.
    fn tag(&self) -> &'static str;
    /// Size of the message in protocol information units.
    fn units(&self) -> usize {
        1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimClock {
    pub now: Tick,
    pub delta: Tick,
    pub gamma: Tick,
    pub round_budget: Tick,
}

impl SimClock {
    pub fn new(delta: Tick, gamma: Tick, round_budget: Tick) -> Self {
        assert!(delta >= 1, "delta must be at least one tick");
        assert!(
            delta <= gamma && gamma <= round_budget,
            "clock bounds must satisfy delta <= gamma <= round budget"
        );
        SimClock {
            now: 0,
            delta,
            gamma,
            round_budget,
        }
    }

    /// Upper delivery bound of a channel class.
    pub fn bound(&self, class: ChannelClass) -> Tick {
        match class {
            ChannelClass::IntraCommittee => self.delta,
            ChannelClass::KeyLink => self.gamma,
            ChannelClass::PartialSync => 10 * self.gamma,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Envelope<M> {
    pub from: NodeId,
    pub to: NodeId,
    pub payload: M,
    pub sent_at: Tick,
    pub deliver_at: Tick,
    pub class: ChannelClass,
    pub sequence: u64,
}

impl<M> Envelope<M> {
    pub fn latency(&self) -> Tick {
        self.deliver_at - self.sent_at
    }
}

/// Where a node sits in the connection graph of one round.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Placement {
    pub committee: Option<u32>,
    pub key_member: bool,
    pub referee: bool,
}

#[derive(Clone, Debug, Default)]
pub struct Topology {
    placements: BTreeMap<NodeId, Placement>,
}

impl Topology {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn place(&mut self, node: NodeId, placement: Placement) {
        self.placements.insert(node, placement);
    }

    pub fn placement(&self, node: NodeId) -> Option<&Placement> {
        self.placements.get(&node)
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.placements.keys().copied()
    }

    pub fn class_for(&self, from: NodeId, to: NodeId) -> Result<ChannelClass, NetError> {
        let a = self.placements.get(&from).ok_or(NetError::UnknownNode(from))?;
        let b = self.placements.get(&to).ok_or(NetError::UnknownNode(to))?;
        if from == to || (a.referee && b.referee) {
            return Ok(ChannelClass::IntraCommittee);
        }
        if a.committee.is_some() && a.committee == b.committee {
            return Ok(ChannelClass::IntraCommittee);
        }
        if (a.key_member || a.referee) && (b.key_member || b.referee) {
            return Ok(ChannelClass::KeyLink);
        }
        if a.referee || b.referee {
            return Ok(ChannelClass::PartialSync);
        }
        Err(NetError::NoChannel(from, to))
    }
}

/// Chooses delivery delays. Implementations must stay within `1..=bound`;
/// the network clamps anything outside that range.
pub trait DeliveryScheduler {
    fn pick_delay(&mut self, from: NodeId, to: NodeId, class: ChannelClass, bound: Tick) -> Tick;
}

/// Uniform delays from a seeded stream.
#[derive(Debug)]
pub struct RandomScheduler {
    rng: ChaCha8Rng,
}

impl RandomScheduler {
    pub fn new(seed: u64) -> Self {
        RandomScheduler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl DeliveryScheduler for RandomScheduler {
    fn pick_delay(&mut self, _from: NodeId, _to: NodeId, _class: ChannelClass, bound: Tick) -> Tick {
        self.rng.gen_range(1..=bound)
    }
}

/// Adversarial worst case: every message takes the full bound of its class.
#[derive(Debug, Default)]
pub struct WorstCaseScheduler;

impl DeliveryScheduler for WorstCaseScheduler {
    fn pick_delay(&mut self, _from: NodeId, _to: NodeId, _class: ChannelClass, bound: Tick) -> Tick {
        bound
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NetStats {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub max_latency: BTreeMap<ChannelClass, Tick>,
}

pub struct SimNetwork<M> {
    clock: SimClock,
    topology: Topology,
    scheduler: Box<dyn DeliveryScheduler>,
    queue: BTreeMap<(Tick, u64), Envelope<M>>,
    next_sequence: u64,
    muted: BTreeSet<NodeId>,
    stats: NetStats,
    trace: Option<Vec<String>>,
}

impl<M: Payload> SimNetwork<M> {
    pub fn new(clock: SimClock, topology: Topology, scheduler: Box<dyn DeliveryScheduler>) -> Self {
        SimNetwork {
            clock,
            topology,
            scheduler,
            queue: BTreeMap::new(),
            next_sequence: 0,
            muted: BTreeSet::new(),
            stats: NetStats::default(),
            trace: None,
        }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn clock(&self) -> &SimClock {
        &self.clock
    }

    pub fn now(&self) -> Tick {
        self.clock.now
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn set_topology(&mut self, topology: Topology) {
        self.topology = topology;
    }

    pub fn stats(&self) -> &NetStats {
        &self.stats
    }

    /// Outbound traffic of a muted node is silently discarded. Only corrupted
    /// nodes may be muted; this models a node pretending to be offline.
    pub fn mute(&mut self, node: NodeId) {
        self.muted.insert(node);
    }

    pub fn unmute_all(&mut self) {
        self.muted.clear();
    }

    pub fn is_muted(&self, node: NodeId) -> bool {
        self.muted.contains(&node)
    }

    pub fn trace_lines(&self) -> &[String] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn take_trace(&mut self) -> Vec<String> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn send(&mut self, from: NodeId, to: NodeId, payload: M) -> Result<ChannelClass, NetError> {
        let class = self.topology.class_for(from, to)?;
        if self.muted.contains(&from) {
            self.stats.dropped += 1;
            return Ok(class);
        }
        let bound = self.clock.bound(class);
        let delay = self.scheduler.pick_delay(from, to, class, bound).clamp(1, bound);
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        let deliver_at = self.clock.now + delay;
        self.queue.insert(
            (deliver_at, sequence),
            Envelope {
                from,
                to,
                payload,
                sent_at: self.clock.now,
                deliver_at,
                class,
                sequence,
            },
        );
        self.stats.sent += 1;
        Ok(class)
    }

    /// Sends `payload` to every target. Either all targets are reachable and
    /// one envelope per target is queued, or nothing is queued.
    pub fn broadcast(&mut self, from: NodeId, targets: &[NodeId], payload: M) -> Result<(), NetError> {
        for &to in targets {
            self.topology.class_for(from, to)?;
        }
        for &to in targets {
            self.send(from, to, payload.clone())?;
        }
        Ok(())
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    pub fn next_delivery_time(&self) -> Option<Tick> {
        self.queue.keys().next().map(|&(t, _)| t)
    }

    /// Moves the clock forward without delivering anything. Time never
    /// decreases and no queued envelope may be skipped.
    pub fn advance_to(&mut self, t: Tick) {
        if let Some(next) = self.next_delivery_time() {
            assert!(t <= next, "cannot advance past a pending delivery");
        }
        self.clock.now = self.clock.now.max(t);
    }

    /// Delivers every envelope due at the earliest pending time, in sequence
    /// order, and moves the clock to that time.
    pub fn step(&mut self) -> Vec<Envelope<M>> {
        let Some(t) = self.next_delivery_time() else {
            return Vec::new();
        };
        let mut out = Vec::new();
        while let Some(entry) = self.queue.first_entry() {
            if entry.key().0 != t {
                break;
            }
            out.push(entry.remove());
        }
        self.clock.now = t;
        for env in &out {
            debug_assert!(env.latency() <= self.clock.bound(env.class));
            self.stats.delivered += 1;
            let worst = self.stats.max_latency.entry(env.class).or_insert(0);
            *worst = (*worst).max(env.latency());
            if let Some(trace) = self.trace.as_mut() {
                trace.push(format!(
                    "{}\t{}\t{}\t{}\t{}",
                    env.deliver_at,
                    env.from,
                    env.to,
                    env.class.label(),
                    env.payload.tag()
                ));
            }
        }
        out
    }

    /// Discards everything still queued and returns how many envelopes were
    /// discarded.
    pub fn clear_pending(&mut self) -> usize {
        let n = self.queue.len();
        self.queue.clear();
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Clone, Debug, PartialEq)]
    struct Msg(&'static str);

    impl Payload for Msg {
        fn tag(&self) -> &'static str {
            self.0
        }
    }

    fn topo() -> Topology {
        let mut t = Topology::new();
        // committee 0: 0 (leader), 1 (partial), 2, 3; committee 1: 4 (leader), 5
        // referee: 8, 9
        let key = |k| Placement {
            committee: Some(k),
            key_member: true,
            referee: false,
        };
        let common = |k| Placement {
            committee: Some(k),
            key_member: false,
            referee: false,
        };
        t.place(NodeId(0), key(0));
        t.place(NodeId(1), key(0));
        t.place(NodeId(2), common(0));
        t.place(NodeId(3), common(0));
        t.place(NodeId(4), key(1));
        t.place(NodeId(5), common(1));
        let referee = Placement {
            committee: None,
            key_member: false,
            referee: true,
        };
        t.place(NodeId(8), referee);
        t.place(NodeId(9), referee);
        t
    }

    fn net(seed: u64, delta: Tick, gamma: Tick) -> SimNetwork<Msg> {
        SimNetwork::new(
            SimClock::new(delta, gamma, 100 * gamma),
            topo(),
            Box::new(RandomScheduler::new(seed)),
        )
        .with_trace()
    }

    #[test]
    fn topology_classes() {
        let t = topo();
        assert_eq!(t.class_for(NodeId(2), NodeId(3)), Ok(ChannelClass::IntraCommittee));
        assert_eq!(t.class_for(NodeId(0), NodeId(4)), Ok(ChannelClass::KeyLink));
        assert_eq!(t.class_for(NodeId(1), NodeId(8)), Ok(ChannelClass::KeyLink));
        assert_eq!(t.class_for(NodeId(8), NodeId(9)), Ok(ChannelClass::IntraCommittee));
        assert_eq!(t.class_for(NodeId(8), NodeId(5)), Ok(ChannelClass::PartialSync));
        assert_eq!(
            t.class_for(NodeId(2), NodeId(5)),
            Err(NetError::NoChannel(NodeId(2), NodeId(5)))
        );
        assert_eq!(
            t.class_for(NodeId(2), NodeId(4)),
            Err(NetError::NoChannel(NodeId(2), NodeId(4)))
        );
        assert_eq!(
            t.class_for(NodeId(2), NodeId(77)),
            Err(NetError::UnknownNode(NodeId(77)))
        );
    }

    #[test]
    fn intra_committee_delivery_within_delta() {
        let mut n = net(1, 4, 12);
        n.advance_to(10);
        n.send(NodeId(2), NodeId(3), Msg("X")).unwrap();
        let got = n.step();
        assert_eq!(got.len(), 1);
        assert!(got[0].deliver_at > 10 && got[0].deliver_at <= 14);
        assert_eq!(n.now(), got[0].deliver_at);
    }

    #[test]
    fn key_link_delivery_within_gamma() {
        for seed in 0..50 {
            let mut n = net(seed, 4, 12);
            n.advance_to(10);
            n.send(NodeId(0), NodeId(4), Msg("X")).unwrap();
            let got = n.step();
            assert!(got[0].deliver_at > 10 && got[0].deliver_at <= 22);
        }
    }

    #[test]
    fn worst_case_scheduler_hits_bounds() {
        let mut n: SimNetwork<Msg> = SimNetwork::new(SimClock::new(2, 5, 100), topo(), Box::new(WorstCaseScheduler));
        n.send(NodeId(8), NodeId(5), Msg("B")).unwrap();
        n.send(NodeId(0), NodeId(4), Msg("K")).unwrap();
        assert_eq!(n.step()[0].latency(), 5);
        assert_eq!(n.step()[0].latency(), 50);
    }

    #[test]
    fn broadcast_cardinality_and_empty() {
        let mut n = net(3, 1, 3);
        n.broadcast(NodeId(0), &[], Msg("P")).unwrap();
        assert_eq!(n.pending(), 0);
        n.broadcast(NodeId(0), &[NodeId(1), NodeId(2), NodeId(3)], Msg("P"))
            .unwrap();
        assert_eq!(n.pending(), 3);
        // unreachable target: nothing queued
        assert!(n.broadcast(NodeId(2), &[NodeId(3), NodeId(5)], Msg("P")).is_err());
        assert_eq!(n.pending(), 3);
    }

    #[test]
    fn empty_step_keeps_clock() {
        let mut n = net(3, 1, 3);
        n.advance_to(7);
        assert!(n.step().is_empty());
        assert_eq!(n.now(), 7);
    }

    #[test]
    fn ties_break_by_sequence() {
        let mut n: SimNetwork<Msg> = SimNetwork::new(SimClock::new(2, 5, 100), topo(), Box::new(WorstCaseScheduler));
        n.send(NodeId(2), NodeId(3), Msg("first")).unwrap();
        n.send(NodeId(3), NodeId(2), Msg("second")).unwrap();
        let got = n.step();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].payload, Msg("first"));
        assert!(got[0].sequence < got[1].sequence);
    }

    #[test]
    fn muted_sender_is_dropped() {
        let mut n = net(3, 1, 3);
        n.mute(NodeId(2));
        n.send(NodeId(2), NodeId(3), Msg("X")).unwrap();
        assert_eq!(n.pending(), 0);
        assert_eq!(n.stats().dropped, 1);
    }

    fn run_trace(seed: u64) -> Vec<String> {
        let mut n = net(seed, 2, 6);
        for i in 0..20u32 {
            let from = NodeId(i % 4);
            let to = NodeId((i + 1) % 4);
            n.send(from, to, Msg("T")).unwrap();
            n.send(NodeId(8), NodeId(5), Msg("B")).unwrap();
        }
        while n.pending() > 0 {
            n.step();
        }
        n.take_trace()
    }

    #[test]
    fn identical_seed_identical_trace() {
        assert_eq!(run_trace(11), run_trace(11));
        assert_ne!(run_trace(11), run_trace(12));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn every_envelope_respects_its_bound_and_arrives_once(seed in any::<u64>(), sends in proptest::collection::vec((0u32..4, 0u32..4), 1..60)) {
                let mut n = net(seed, 3, 7);
                let mut delivered = Vec::new();
                for (i, (a, b)) in sends.iter().enumerate() {
                    if i % 4 == 3 {
                        delivered.extend(n.step());
                    }
                    n.send(NodeId(*a), NodeId(*b), Msg("T")).unwrap();
                }
                while n.pending() > 0 {
                    delivered.extend(n.step());
                }
                let mut seen = BTreeSet::new();
                let mut last = 0;
                {
                    for env in delivered {
                        prop_assert!(env.latency() >= 1 && env.latency() <= n.clock().bound(env.class));
                        prop_assert!(env.deliver_at >= last);
                        last = env.deliver_at;
                        prop_assert!(seen.insert(env.sequence));
                    }
                }
                prop_assert_eq!(seen.len(), sends.len());
            }
        }
    }
}
