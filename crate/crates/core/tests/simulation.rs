use std::collections::BTreeSet;

use cycledger::adversary::Strategy;
use cycledger::sim::{run, RoleTarget, RunConfig, SimError};

fn base(seed: u64) -> RunConfig {
    RunConfig {
        seed,
        rounds: 2,
        ..RunConfig::default()
    }
}

#[test]
fn every_round_releases_a_block_and_conserves_value() {
    let out = run(&base(31)).unwrap();
    assert_eq!(out.chain_dump.lines().count(), 2);
    for r in &out.reports {
        let b = r.block.as_ref().unwrap();
        assert_eq!(r.value_before, r.value_after + u128::from(b.fees));
        let ids: BTreeSet<_> = b.txs.iter().map(|t| t.id()).collect();
        assert_eq!(ids.len(), b.txs.len());
    }
}

#[test]
fn invalid_transactions_are_never_packed() {
    let cfg = RunConfig {
        invalid_rate: 0.3,
        ..base(17)
    };
    let out = run(&cfg).unwrap();
    let mut invalid = 0;
    for r in &out.reports {
        let packed: BTreeSet<_> = r.packed.iter().collect();
        for (id, valid) in &r.submitted {
            if !valid {
                invalid += 1;
                assert!(!packed.contains(id));
            }
        }
    }
    assert!(invalid > 0);
}

#[test]
fn block_cap_carries_the_rest_into_later_rounds() {
    let cfg = RunConfig {
        block_cap: Some(40),
        rounds: 3,
        ..base(8)
    };
    let out = run(&cfg).unwrap();
    for r in &out.reports {
        assert!(r.block.as_ref().unwrap().txs.len() <= 40);
        assert!(r.metrics.remaining > 0);
    }
}

#[test]
fn honest_reputation_grows_and_rewards_match_fees() {
    let out = run(&base(3)).unwrap();
    let last = out.reports.last().unwrap();
    let b = last.block.as_ref().unwrap();
    assert!(b.reputations.iter().any(|(_, w)| *w > 0.0));
    let paid: f64 = last.rewards.values().sum();
    assert!((paid - b.fees as f64).abs() <= 1e-9 * b.fees as f64);
}

#[test]
fn vote_manipulation_costs_reputation() {
    let cfg = RunConfig {
        strategies: vec![Strategy::VoteInverter],
        corrupt_random: 20,
        ..base(12)
    };
    let out = run(&cfg).unwrap();
    let last = out.reports.last().unwrap();
    let table = &last.block.as_ref().unwrap().reputations;
    let mean = |pick: bool| {
        let v: Vec<f64> = table
            .iter()
            .filter(|(id, _)| last.corrupted.contains(id) == pick)
            .map(|(_, w)| *w)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    assert!(mean(true) < mean(false));
    assert_eq!(last.metrics.packed, last.metrics.submitted_valid);
}

#[test]
fn replaced_leaders_change_across_rounds() {
    let cfg = RunConfig {
        strategies: vec![Strategy::EquivocatingLeader],
        corrupt_roles: vec![RoleTarget::Leader(1)],
        ..base(5)
    };
    let out = run(&cfg).unwrap();
    assert_eq!(out.reports[0].evictions.len(), 1);
    assert!(out.reports.iter().all(|r| r.block.is_some()));
}

#[test]
fn bad_settings_are_rejected_before_running() {
    let cfg = RunConfig { n: 20, ..base(1) };
    match run(&cfg) {
        Err(SimError::Config(e)) => assert_eq!(e.field, "n"),
        other => panic!("expected config error, got {other:?}"),
    }
}

#[test]
fn shipped_configs_are_valid() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["honest.cfg", "equivocating.cfg"] {
        let text = std::fs::read_to_string(dir.join(name)).unwrap();
        RunConfig::from_text(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
