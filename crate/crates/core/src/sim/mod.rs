//! Round-by-round simulation of the whole protocol over the simulated network.
//!
//! [`run`] drives `rounds` rounds of configuration, the semi-commitment
//! exchange, intra- and cross-shard agreement, recovery and block release,
//! and returns per-round reports together with the chain dump and CSV
//! renderings of the collected metrics. Identical configurations produce
//! byte-identical outputs.

pub mod config;
pub mod message;
pub mod metrics;
pub mod node;
pub mod sweep;
pub mod workload;

mod protocol;
mod recovery;
mod referee;
mod world;

use thiserror::Error;

use crate::adversary::AdversaryError;
use crate::committee::SelectionError;

pub use config::{ConfigError, RoleTarget, RunConfig, SchedulerKind};
pub use message::Phase;
pub use metrics::{MessageRow, ReputationRow, RoundMetrics};
pub use node::Eviction;
pub use world::RoundReport;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error("key-member selection failed: {0}")]
    Selection(#[from] SelectionError),
}

/// Everything a finished run produced.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub reports: Vec<RoundReport>,
    /// One line per round: the block summary, or `noblock` and the round.
    pub chain_dump: String,
    pub metrics_csv: String,
    pub messages_csv: String,
    pub reputation_csv: String,
    pub message_rows: Vec<MessageRow>,
    /// Network trace lines, empty unless tracing was requested.
    pub trace: Vec<String>,
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput, SimError> {
    execute(cfg, false)
}

/// Like [`run`], also recording every delivered message.
pub fn run_traced(cfg: &RunConfig) -> Result<RunOutput, SimError> {
    execute(cfg, true)
}

fn execute(cfg: &RunConfig, tracing: bool) -> Result<RunOutput, SimError> {
    let mut w = world::World::new(cfg.clone(), tracing)?;
    w.run()?;
    let mut chain_dump = String::new();
    for r in &w.reports {
        match &r.block {
            Some(b) => chain_dump.push_str(&b.dump_line()),
            None => chain_dump.push_str(&format!("noblock\t{}", r.metrics.round)),
        }
        chain_dump.push('\n');
    }
    let rows: Vec<RoundMetrics> = w.reports.iter().map(|r| r.metrics.clone()).collect();
    Ok(RunOutput {
        chain_dump,
        metrics_csv: metrics::metrics_csv(&rows),
        messages_csv: metrics::messages_csv(&w.message_rows),
        reputation_csv: metrics::reputation_csv(&w.reputation_rows),
        message_rows: std::mem::take(&mut w.message_rows),
        trace: std::mem::take(&mut w.trace),
        reports: std::mem::take(&mut w.reports),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::Strategy;

    fn cfg(rounds: u64, seed: u64) -> RunConfig {
        RunConfig {
            rounds,
            seed,
            ..RunConfig::default()
        }
    }

    fn attacked(s: Strategy, target: RoleTarget, seed: u64) -> RoundReport {
        let c = RunConfig {
            strategies: vec![s],
            corrupt_roles: vec![target],
            ..cfg(1, seed)
        };
        run(&c).unwrap().reports.remove(0)
    }

    #[test]
    fn honest_rounds_pack_every_valid_transaction() {
        let out = run(&cfg(3, 7)).unwrap();
        for r in &out.reports {
            assert_eq!(r.send_errors, 0);
            assert!(r.evictions.is_empty(), "{:?}", r.evictions);
            let b = r.block.as_ref().expect("block released");
            assert_eq!(r.value_before, r.value_after + b.fees as u128);
            assert_eq!(b.txs.len(), r.metrics.submitted_valid);
            assert!((r.metrics.rewards - b.fees as f64).abs() <= 1e-9 * b.fees.max(1) as f64);
        }
    }

    #[test]
    fn honest_members_learn_the_whole_committee() {
        let r = &run(&cfg(1, 11)).unwrap().reports[0];
        let total: usize = r.committee_sizes.iter().sum();
        let known: usize = r.known_sizes.values().sum();
        assert_eq!(known, r.committee_sizes.iter().map(|s| s * s).sum::<usize>());
        assert_eq!(r.known_sizes.len(), total);
    }

    #[test]
    fn runs_are_deterministic() {
        let a = run(&cfg(2, 4)).unwrap();
        let b = run(&cfg(2, 4)).unwrap();
        assert_eq!(a.chain_dump, b.chain_dump);
        assert_eq!(a.metrics_csv, b.metrics_csv);
        assert_eq!(a.messages_csv, b.messages_csv);
        assert_eq!(a.reputation_csv, b.reputation_csv);
        let c = run(&cfg(2, 5)).unwrap();
        assert_ne!(a.chain_dump, c.chain_dump);
    }

    #[test]
    fn zero_rounds_is_a_config_error() {
        assert!(matches!(run(&cfg(0, 1)), Err(SimError::Config(_))));
    }

    #[test]
    fn leader_faults_are_evicted_within_the_round() {
        for (s, kind) in [
            (Strategy::EquivocatingLeader, "equivocation"),
            (Strategy::ForgedMemberList, "member-omission"),
            (Strategy::FalseSemiCommitment, "commitment-mismatch"),
            (Strategy::ConcealingCrossShardLeader, "cross-shard-forgery"),
            (Strategy::ImitatingCrossShardLeader, "cross-shard-forgery"),
            (Strategy::UnregisteredMember, "invalid-commitment"),
        ] {
            let r = attacked(s, RoleTarget::Leader(0), 3);
            assert_eq!(r.evictions.len(), 1, "{s}");
            assert_eq!(r.evictions[0].kind, kind, "{s}");
            assert!(r.evictions[0].old_corrupted);
            assert_eq!(r.metrics.packed, r.metrics.submitted_valid, "{s}");
        }
    }

    #[test]
    fn framing_does_not_evict_an_honest_leader() {
        let r = attacked(Strategy::FramingPartialMember, RoleTarget::Partial(0, 0), 9);
        assert!(r.evictions.is_empty());
        assert!(r.block.is_some());
    }

    #[test]
    fn offline_leader_is_replaced_for_missing_commitment() {
        let r = attacked(Strategy::Offline, RoleTarget::Leader(2), 6);
        assert_eq!(r.evictions.len(), 1);
        assert_eq!(r.evictions[0].kind, "missing-commitment");
        assert_eq!(r.metrics.packed, r.metrics.submitted_valid);
    }
}
