//! Parameter sweeps feeding the message-complexity regression.

use std::collections::BTreeMap;

use crate::complexity::SweepPoint;

use super::{run, RunConfig, SimError};

/// Committee sizes of the c-axis sweep (m fixed at 4).
pub const C_VALUES: [usize; 3] = [8, 16, 32];
/// Committee counts of the m-axis sweep (c fixed at 16). The referee's
/// fixed agreement overhead hides the quadratic term below m = 8.
pub const M_VALUES: [u32; 3] = [8, 16, 32];

const REFEREE: usize = 8;
const LAMBDA: usize = 3;

fn sweep_config(seed: u64, m: u32, c: usize, rounds: u64) -> RunConfig {
    RunConfig {
        n: m as usize * c + REFEREE,
        m,
        lambda: LAMBDA,
        referee_size: Some(REFEREE),
        rounds,
        tx_budget: 8,
        users_per_shard: 4,
        utxos_per_user: 4,
        seed,
        ..RunConfig::default()
    }
}

/// Runs one configuration and averages per-node sent units by (role, phase)
/// over its rounds. The x-value is the observed mean committee size for the
/// c-axis and `m` for the m-axis.
fn measure(cfg: &RunConfig, by_committees: bool) -> Result<SweepPoint, SimError> {
    let out = run(cfg)?;
    let mut sums: BTreeMap<(String, String), (f64, usize)> = BTreeMap::new();
    for row in &out.message_rows {
        let e = sums
            .entry((row.role.to_string(), row.phase.label().to_string()))
            .or_default();
        e.0 += row.mean_sent;
        e.1 += 1;
    }
    let sizes: Vec<f64> = out
        .reports
        .iter()
        .map(|r| r.committee_sizes.iter().sum::<usize>() as f64 / r.committee_sizes.len() as f64)
        .collect();
    let param = if by_committees {
        cfg.m as f64
    } else {
        sizes.iter().sum::<f64>() / sizes.len() as f64
    };
    Ok(SweepPoint {
        param,
        load: sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect(),
    })
}

/// Both sweeps: the first varies committee size, the second committee count.
pub fn complexity_sweeps(seed: u64, rounds: u64) -> Result<(Vec<SweepPoint>, Vec<SweepPoint>), SimError> {
    let c_sweep = C_VALUES
        .iter()
        .map(|&c| measure(&sweep_config(seed, 4, c, rounds), false))
        .collect::<Result<Vec<_>, _>>()?;
    let m_sweep = M_VALUES
        .iter()
        .map(|&m| measure(&sweep_config(seed, m, 16, rounds), true))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((c_sweep, m_sweep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexity::complexity_report;

    #[test]
    fn sweep_configs_are_valid() {
        for c in C_VALUES {
            sweep_config(1, 4, c, 1).validate().unwrap();
        }
        for m in M_VALUES {
            sweep_config(1, m, 16, 1).validate().unwrap();
        }
    }

    #[test]
    fn checked_slopes_are_reported() {
        let (c, m) = complexity_sweeps(3, 1).unwrap();
        let rows = complexity_report(&c, &m).unwrap();
        for r in rows.iter().filter(|r| r.expected.is_some()) {
            eprintln!(
                "{} {} {} slope={:.3} expected={:?}",
                r.axis.label(),
                r.role,
                r.phase,
                r.slope,
                r.expected
            );
        }
        assert_eq!(rows.iter().filter(|r| r.expected.is_some()).count(), 3);
    }
}
