//! Run configuration: a flat `key = value` text format with typed fields.

use std::collections::BTreeSet;
use std::str::FromStr;

use thiserror::Error;

use crate::adversary::Strategy;
use crate::net::{NodeId, Tick};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("config field `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

/// A role-based corruption target, resolved against the genesis assignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum RoleTarget {
    /// Round-0 leader of a committee.
    Leader(u32),
    /// The i-th round-0 partial-set member of a committee.
    Partial(u32, usize),
}

impl FromStr for RoleTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| p.parse::<u64>().map_err(|_| format!("bad number `{p}` in `{s}`"));
        match parts.as_slice() {
            ["leader", k] => Ok(RoleTarget::Leader(num(k)? as u32)),
            ["partial", k, i] => Ok(RoleTarget::Partial(num(k)? as u32, num(i)? as usize)),
            _ => Err(format!("expected leader:K or partial:K:I, got `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchedulerKind {
    Random,
    WorstCase,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub m: u32,
    pub lambda: usize,
    pub delta: Tick,
    pub gamma: Tick,
    pub round_budget: Tick,
    pub rounds: u64,
    pub tx_budget: usize,
    pub seed: u64,
    /// Expected referee committee size; `None` means n / (m + 1).
    pub referee_size: Option<usize>,
    pub min_referee: usize,
    /// Registration puzzle difficulty as a number of leading zero bits.
    pub pow_bits: u32,
    pub users_per_shard: usize,
    pub utxos_per_user: usize,
    pub initial_amount: u64,
    /// Probability that a generated transaction is invalid.
    pub invalid_rate: f64,
    pub block_cap: Option<usize>,
    pub scheduler: SchedulerKind,
    pub strategies: Vec<Strategy>,
    pub corrupt: BTreeSet<NodeId>,
    pub corrupt_roles: Vec<RoleTarget>,
    pub corrupt_random: usize,
    pub corrupt_requests: Vec<(u64, BTreeSet<NodeId>)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 120,
            m: 4,
            lambda: 5,
            delta: 1,
            gamma: 3,
            round_budget: 240,
            rounds: 3,
            tx_budget: 32,
            seed: 0,
            referee_size: None,
            min_referee: 4,
            pow_bits: 4,
            users_per_shard: 16,
            utxos_per_user: 8,
            initial_amount: 1000,
            invalid_rate: 0.0,
            block_cap: None,
            scheduler: SchedulerKind::Random,
            strategies: Vec::new(),
            corrupt: BTreeSet::new(),
            corrupt_roles: Vec::new(),
            corrupt_random: 0,
            corrupt_requests: Vec::new(),
        }
    }
}

fn parse_num<T: FromStr>(field: &str, value: &str) -> Result<T, ConfigError> {
    value
        .trim()
        .parse()
        .map_err(|_| ConfigError::new(field, format!("cannot parse `{value}`")))
}

fn parse_ids(field: &str, value: &str) -> Result<BTreeSet<NodeId>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num::<u32>(field, s).map(NodeId))
        .collect()
}

impl RunConfig {
    /// Expected referee size actually used.
    pub fn referee_target(&self) -> usize {
        self.referee_size.unwrap_or(self.n / (self.m as usize + 1))
    }

    /// Tick offset inside a round at which the referee proposes the block.
    pub fn block_offset(&self) -> Tick {
        self.round_budget - 12 * self.gamma - 12 * self.delta
    }

    /// Tick offset at which intra-committee transaction agreement starts.
    pub fn tx_offset(&self) -> Tick {
        8 * self.delta + 6 * self.gamma
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key = key.trim();
        let value = value.trim();
        match key {
            "n" => self.n = parse_num(key, value)?,
            "m" => self.m = parse_num(key, value)?,
            "lambda" => self.lambda = parse_num(key, value)?,
            "delta" => self.delta = parse_num(key, value)?,
            "gamma" => self.gamma = parse_num(key, value)?,
            "round_budget" | "T" => self.round_budget = parse_num(key, value)?,
            "rounds" => self.rounds = parse_num(key, value)?,
            "tx_budget" | "B" => self.tx_budget = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "referee_size" => {
                self.referee_size = if value == "auto" {
                    None
                } else {
                    Some(parse_num(key, value)?)
                }
            }
            "min_referee" => self.min_referee = parse_num(key, value)?,
            "pow_bits" => self.pow_bits = parse_num(key, value)?,
            "users_per_shard" => self.users_per_shard = parse_num(key, value)?,
            "utxos_per_user" => self.utxos_per_user = parse_num(key, value)?,
            "initial_amount" => self.initial_amount = parse_num(key, value)?,
            "invalid_rate" => self.invalid_rate = parse_num(key, value)?,
            "block_cap" => {
                self.block_cap = if value == "none" {
                    None
                } else {
                    Some(parse_num(key, value)?)
                }
            }
            "scheduler" => {
                self.scheduler = match value {
                    "random" => SchedulerKind::Random,
                    "worst" => SchedulerKind::WorstCase,
                    _ => return Err(ConfigError::new(key, "expected `random` or `worst`")),
                }
            }
            "strategies" | "strategy" => {
                self.strategies = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<Strategy>().map_err(|e| ConfigError::new(key, e.to_string())))
                    .collect::<Result<_, _>>()?
            }
            "corrupt" => self.corrupt = parse_ids(key, value)?,
            "corrupt_roles" => {
                self.corrupt_roles = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<RoleTarget>().map_err(|e| ConfigError::new(key, e)))
                    .collect::<Result<_, _>>()?
            }
            "corrupt_random" => self.corrupt_random = parse_num(key, value)?,
            "corrupt_requests" => {
                let mut out = Vec::new();
                for part in value.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                    let (r, ids) = part
                        .split_once(':')
                        .ok_or_else(|| ConfigError::new(key, format!("expected ROUND:IDS, got `{part}`")))?;
                    out.push((parse_num(key, r)?, parse_ids(key, ids)?));
                }
                self.corrupt_requests = out;
            }
            _ => return Err(ConfigError::new(key, "unknown setting")),
        }
        Ok(())
    }

    /// Applies every setting of a config file. Blank lines and lines
    /// starting with `#` are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::new(&format!("line {}", i + 1), "expected `key = value`"))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.rounds == 0 {
            return Err(ConfigError::new("rounds", "at least one round is required"));
        }
        if self.m == 0 {
            return Err(ConfigError::new("m", "at least one committee is required"));
        }
        if self.lambda == 0 {
            return Err(ConfigError::new("lambda", "partial sets need at least one member"));
        }
        if self.delta == 0 {
            return Err(ConfigError::new("delta", "must be at least one tick"));
        }
        if self.gamma < self.delta {
            return Err(ConfigError::new("gamma", "must be at least delta"));
        }
        let needed = 40 * self.delta + 24 * self.gamma;
        if self.round_budget < needed {
            return Err(ConfigError::new(
                "round_budget",
                format!("must be at least 40*delta + 24*gamma = {needed}"),
            ));
        }
        if self.min_referee == 0 {
            return Err(ConfigError::new("min_referee", "must be at least 1"));
        }
        let seats = self.m as usize * (self.lambda + 1) + self.min_referee.max(self.referee_target());
        if self.n < seats + self.m as usize {
            return Err(ConfigError::new(
                "n",
                format!(
                    "{} nodes cannot fill {seats} key and referee seats plus one common member per committee",
                    self.n
                ),
            ));
        }
        if self.tx_budget == 0 {
            return Err(ConfigError::new("tx_budget", "must be at least 1"));
        }
        if self.pow_bits > 24 {
            return Err(ConfigError::new(
                "pow_bits",
                "toy difficulty must stay at or below 24 bits",
            ));
        }
        if self.users_per_shard == 0 || self.utxos_per_user == 0 {
            return Err(ConfigError::new(
                "users_per_shard",
                "the workload needs users and coins",
            ));
        }
        if self.initial_amount < 8 {
            return Err(ConfigError::new("initial_amount", "must be at least 8"));
        }
        if !(0.0..=1.0).contains(&self.invalid_rate) {
            return Err(ConfigError::new("invalid_rate", "must lie in [0, 1]"));
        }
        if self.block_cap == Some(0) {
            return Err(ConfigError::new("block_cap", "must be positive or `none`"));
        }
        for id in self
            .corrupt
            .iter()
            .chain(self.corrupt_requests.iter().flat_map(|(_, s)| s))
        {
            if id.0 as usize >= self.n {
                return Err(ConfigError::new("corrupt", format!("node {id} does not exist")));
            }
        }
        for t in &self.corrupt_roles {
            let ok = match *t {
                RoleTarget::Leader(k) => k < self.m,
                RoleTarget::Partial(k, i) => k < self.m && i < self.lambda,
            };
            if !ok {
                return Err(ConfigError::new(
                    "corrupt_roles",
                    format!("{t:?} is outside the assignment"),
                ));
            }
        }
        Ok(())
    }

    /// The configuration as `key = value` lines, accepted back by
    /// [`RunConfig::from_text`].
    pub fn to_text(&self) -> String {
        let join_ids = |s: &BTreeSet<NodeId>| s.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        let mut kv = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        kv("n", self.n.to_string());
        kv("m", self.m.to_string());
        kv("lambda", self.lambda.to_string());
        kv("delta", self.delta.to_string());
        kv("gamma", self.gamma.to_string());
        kv("round_budget", self.round_budget.to_string());
        kv("rounds", self.rounds.to_string());
        kv("tx_budget", self.tx_budget.to_string());
        kv("seed", self.seed.to_string());
        kv(
            "referee_size",
            self.referee_size.map_or("auto".to_string(), |r| r.to_string()),
        );
        kv("min_referee", self.min_referee.to_string());
        kv("pow_bits", self.pow_bits.to_string());
        kv("users_per_shard", self.users_per_shard.to_string());
        kv("utxos_per_user", self.utxos_per_user.to_string());
        kv("initial_amount", self.initial_amount.to_string());
        kv("invalid_rate", self.invalid_rate.to_string());
        kv(
            "block_cap",
            self.block_cap.map_or("none".to_string(), |c| c.to_string()),
        );
        kv(
            "scheduler",
            match self.scheduler {
                SchedulerKind::Random => "random".to_string(),
                SchedulerKind::WorstCase => "worst".to_string(),
            },
        );
        kv(
            "strategies",
            self.strategies.iter().map(|s| s.name()).collect::<Vec<_>>().join(","),
        );
        kv("corrupt", join_ids(&self.corrupt));
        kv(
            "corrupt_roles",
            self.corrupt_roles
                .iter()
                .map(|t| match t {
                    RoleTarget::Leader(k) => format!("leader:{k}"),
                    RoleTarget::Partial(k, i) => format!("partial:{k}:{i}"),
                })
                .collect::<Vec<_>>()
                .join(","),
        );
        kv("corrupt_random", self.corrupt_random.to_string());
        kv(
            "corrupt_requests",
            self.corrupt_requests
                .iter()
                .map(|(r, s)| format!("{r}:{}", join_ids(s)))
                .collect::<Vec<_>>()
                .join(";"),
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn zero_rounds_is_rejected_with_field() {
        let err = RunConfig::from_text("rounds = 0\n").unwrap_err();
        assert_eq!(err.field, "rounds");
    }

    #[test]
    fn parses_adversary_settings() {
        let cfg = RunConfig::from_text(
            "# comment\nseed = 9\nstrategies = EquivocatingLeader, offline\ncorrupt_roles = leader:0,partial:1:2\ncorrupt_requests = 2:5,6;3:7\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.strategies, vec![Strategy::EquivocatingLeader, Strategy::Offline]);
        assert_eq!(
            cfg.corrupt_roles,
            vec![RoleTarget::Leader(0), RoleTarget::Partial(1, 2)]
        );
        assert_eq!(cfg.corrupt_requests.len(), 2);
        assert_eq!(cfg.corrupt_requests[0].1.len(), 2);
    }

    #[test]
    fn unknown_key_and_bad_value() {
        assert_eq!(RunConfig::from_text("bogus = 1").unwrap_err().field, "bogus");
        assert_eq!(RunConfig::from_text("n = many").unwrap_err().field, "n");
        assert_eq!(RunConfig::from_text("n = 20").unwrap_err().field, "n");
    }

    #[test]
    fn text_round_trip() {
        let cfg = RunConfig {
            seed: 77,
            block_cap: Some(10),
            strategies: vec![Strategy::RandomVoter],
            corrupt_roles: vec![RoleTarget::Partial(0, 1)],
            ..RunConfig::default()
        };
        assert_eq!(RunConfig::from_text(&cfg.to_text()).unwrap(), cfg);
    }
}
