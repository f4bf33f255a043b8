//! Per-round counters and their CSV renderings.

use std::collections::BTreeMap;

use crate::committee::Role;
use crate::net::NodeId;

use super::message::Phase;

/// Units sent and received per (node, phase) during one round.
#[derive(Clone, Debug, Default)]
pub struct Traffic {
    counts: BTreeMap<(NodeId, Phase), (u64, u64)>,
}

impl Traffic {
    pub fn sent(&mut self, node: NodeId, phase: Phase, units: usize) {
        self.counts.entry((node, phase)).or_default().0 += units as u64;
    }

    pub fn received(&mut self, node: NodeId, phase: Phase, units: usize) {
        self.counts.entry((node, phase)).or_default().1 += units as u64;
    }

    pub fn get(&self, node: NodeId, phase: Phase) -> (u64, u64) {
        self.counts.get(&(node, phase)).copied().unwrap_or((0, 0))
    }
}

/// Role labels averaged in the message report. `key` pools leaders and
/// partial-set members.
pub const REPORT_ROLES: [&str; 5] = ["common", "leader", "partial", "key", "referee"];

fn role_groups(role: &Role) -> Vec<&'static str> {
    match role {
        Role::Common(_) => vec!["common"],
        Role::Leader(_) => vec!["leader", "key"],
        Role::PartialSet(_) => vec!["partial", "key"],
        Role::Referee => vec!["referee"],
        Role::Idle => vec![],
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MessageRow {
    pub round: u64,
    pub role: &'static str,
    pub phase: Phase,
    pub nodes: usize,
    pub mean_sent: f64,
    pub mean_received: f64,
}

/// Mean units per node for each (role, phase) of one round.
pub fn message_rows(round: u64, roles: &BTreeMap<NodeId, Role>, traffic: &Traffic) -> Vec<MessageRow> {
    let mut rows = Vec::new();
    for group in REPORT_ROLES {
        let members: Vec<NodeId> = roles
            .iter()
            .filter(|(_, r)| role_groups(r).contains(&group))
            .map(|(id, _)| *id)
            .collect();
        if members.is_empty() {
            continue;
        }
        for phase in Phase::ALL {
            let (s, r) = members.iter().fold((0u64, 0u64), |acc, id| {
                let (s, r) = traffic.get(*id, phase);
                (acc.0 + s, acc.1 + r)
            });
            rows.push(MessageRow {
                round,
                role: group,
                phase,
                nodes: members.len(),
                mean_sent: s as f64 / members.len() as f64,
                mean_received: r as f64 / members.len() as f64,
            });
        }
    }
    rows
}

pub fn messages_csv(rows: &[MessageRow]) -> String {
    let mut out = String::from("round,role,phase,nodes,mean_sent_units,mean_received_units\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.6}\n",
            r.round,
            r.role,
            r.phase.label(),
            r.nodes,
            r.mean_sent,
            r.mean_received
        ));
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RoundMetrics {
    pub round: u64,
    pub block: bool,
    pub submitted: usize,
    pub submitted_valid: usize,
    pub packed: usize,
    pub cross: usize,
    pub evictions: usize,
    pub witnesses: usize,
    pub fees: u64,
    pub rewards: f64,
    pub insecure_committees: usize,
    pub insecure_partial_sets: usize,
    pub remaining: usize,
    pub rejected: usize,
    pub messages: u64,
}

pub fn metrics_csv(rows: &[RoundMetrics]) -> String {
    let mut out = String::from(
        "round,block,submitted,submitted_valid,packed,cross,evictions,witnesses,fees,rewards,insecure_committees,insecure_partial_sets,remaining,rejected,messages\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{:.6},{},{},{},{},{}\n",
            r.round,
            r.block as u8,
            r.submitted,
            r.submitted_valid,
            r.packed,
            r.cross,
            r.evictions,
            r.witnesses,
            r.fees,
            r.rewards,
            r.insecure_committees,
            r.insecure_partial_sets,
            r.remaining,
            r.rejected,
            r.messages
        ));
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReputationRow {
    pub round: u64,
    pub node: NodeId,
    pub role: &'static str,
    pub before: f64,
    pub score: f64,
    pub after: f64,
    pub reward: f64,
}

pub fn reputation_csv(rows: &[ReputationRow]) -> String {
    let mut out = String::from("round,node,role,rep_before,score,rep_after,reward\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.9},{:.9},{:.9},{:.9}\n",
            r.round, r.node, r.role, r.before, r.score, r.after, r.reward
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_pools_leaders_and_partials() {
        let roles: BTreeMap<NodeId, Role> = [
            (NodeId(0), Role::Leader(0)),
            (NodeId(1), Role::PartialSet(0)),
            (NodeId(2), Role::Common(0)),
        ]
        .into_iter()
        .collect();
        let mut t = Traffic::default();
        t.sent(NodeId(0), Phase::Config, 10);
        t.sent(NodeId(1), Phase::Config, 4);
        t.received(NodeId(2), Phase::Config, 3);
        let rows = message_rows(0, &roles, &t);
        let key = rows
            .iter()
            .find(|r| r.role == "key" && r.phase == Phase::Config)
            .unwrap();
        assert_eq!(key.nodes, 2);
        assert_eq!(key.mean_sent, 7.0);
        let common = rows
            .iter()
            .find(|r| r.role == "common" && r.phase == Phase::Config)
            .unwrap();
        assert_eq!(common.mean_received, 3.0);
        assert!(rows.iter().all(|r| r.role != "referee"));
        let csv = messages_csv(&rows);
        assert!(csv.starts_with("round,role,phase,nodes,"));
    }
}
