//! Network scenario description and the flat action catalog.

use std::collections::BTreeSet;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("scenario needs at least one host")]
    NoHosts,
    #[error("scenario needs at least one subnet")]
    NoSubnets,
    #[error("subnet_of must list one subnet per host ({hosts} hosts, {entries} entries)")]
    SubnetMapLength { hosts: usize, entries: usize },
    #[error("host {host} assigned to unknown subnet {subnet}")]
    SubnetOutOfRange { host: usize, subnet: usize },
    #[error("adjacency must be a {subnets}x{subnets} matrix")]
    AdjacencyShape { subnets: usize },
    #[error("adjacency is not symmetric at ({a}, {b})")]
    AsymmetricAdjacency { a: usize, b: usize },
    #[error("subnet {0} is not adjacent to itself")]
    MissingSelfAdjacency(usize),
    #[error("scenario needs at least one flag host")]
    NoFlags,
    #[error("flag host {0} out of range")]
    FlagOutOfRange(usize),
    #[error("foothold host {0} out of range")]
    FootholdOutOfRange(usize),
    #[error("foothold host {0} may not hold a flag")]
    FootholdIsFlag(usize),
    #[error("exploit_prob must lie in (0, 1], got {0}")]
    BadExploitProb(f64),
    #[error("step_limit must be >= 1")]
    BadStepLimit,
    #[error("action type counts out of range: m <= 2, n <= 1, o <= 2 are supported")]
    BadActionTypeCounts,
    #[error("scenario has zero actions")]
    EmptyCatalog,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot read scenario file: {0}")]
    Io(String),
    #[error("unknown scenario '{0}': not a file and not an embedded preset")]
    UnknownScenario(String),
}

/// Reward constants. Defaults: flag capture +10, new pivot +0.2,
/// unmet precondition or dead-zone id -0.1, failed exploit roll 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardScheme {
    pub flag: f64,
    pub pivot: f64,
    pub invalid: f64,
    pub failed_exploit: f64,
}

impl Default for RewardScheme {
    fn default() -> Self {
        Self {
            flag: 10.0,
            pivot: 0.2,
            invalid: -0.1,
            failed_exploit: 0.0,
        }
    }
}

/// Topology, flag placement, stochastic exploit parameters, and the
/// action-type counts that size the catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub hosts: usize,
    pub subnets: usize,
    /// Subnet index per host.
    pub subnet_of: Vec<usize>,
    /// Symmetric, reflexive subnet adjacency matrix.
    pub adjacency: Vec<Vec<bool>>,
    pub flag_hosts: BTreeSet<usize>,
    pub foothold: usize,
    pub exploit_prob: f64,
    pub step_limit: usize,
    /// Host-to-host action types in use (prefix of [ServiceScan, ExploitSsh]).
    pub host_to_host_types: usize,
    /// Host-to-subnet action types in use (prefix of [SubnetScan]).
    pub host_to_subnet_types: usize,
    /// On-host action types in use (prefix of [OsInfo, PassiveObserve]).
    pub on_host_types: usize,
    pub rewards: RewardScheme,
}

/// One entry of the flat action catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    ServiceScan { src: usize, target: usize },
    ExploitSsh { src: usize, target: usize },
    SubnetScan { src: usize, subnet: usize },
    OsInfo { host: usize },
    PassiveObserve { host: usize },
}

impl std::fmt::Display for Action {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Action::ServiceScan { src, target } => write!(f, "ServiceScan src={src} tgt={target}"),
            Action::ExploitSsh { src, target } => write!(f, "ExploitSSH src={src} tgt={target}"),
            Action::SubnetScan { src, subnet } => write!(f, "SubnetScan src={src} subnet={subnet}"),
            Action::OsInfo { host } => write!(f, "OSInfo host={host}"),
            Action::PassiveObserve { host } => write!(f, "PassiveObserve host={host}"),
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.hosts == 0 {
            return Err(ScenarioError::NoHosts);
        }
        if self.subnets == 0 {
            return Err(ScenarioError::NoSubnets);
        }
        if self.subnet_of.len() != self.hosts {
            return Err(ScenarioError::SubnetMapLength {
                hosts: self.hosts,
                entries: self.subnet_of.len(),
            });
        }
        for (host, &subnet) in self.subnet_of.iter().enumerate() {
            if subnet >= self.subnets {
                return Err(ScenarioError::SubnetOutOfRange { host, subnet });
            }
        }
        if self.adjacency.len() != self.subnets
            || self.adjacency.iter().any(|row| row.len() != self.subnets)
        {
            return Err(ScenarioError::AdjacencyShape {
                subnets: self.subnets,
            });
        }
        for a in 0..self.subnets {
            if !self.adjacency[a][a] {
                return Err(ScenarioError::MissingSelfAdjacency(a));
            }
            for b in 0..self.subnets {
                if self.adjacency[a][b] != self.adjacency[b][a] {
                    return Err(ScenarioError::AsymmetricAdjacency { a, b });
                }
            }
        }
        if self.flag_hosts.is_empty() {
            return Err(ScenarioError::NoFlags);
        }
        for &flag in &self.flag_hosts {
            if flag >= self.hosts {
                return Err(ScenarioError::FlagOutOfRange(flag));
            }
        }
        if self.foothold >= self.hosts {
            return Err(ScenarioError::FootholdOutOfRange(self.foothold));
        }
        if self.flag_hosts.contains(&self.foothold) {
            return Err(ScenarioError::FootholdIsFlag(self.foothold));
        }
        if !(self.exploit_prob > 0.0 && self.exploit_prob <= 1.0) {
            return Err(ScenarioError::BadExploitProb(self.exploit_prob));
        }
        if self.step_limit == 0 {
            return Err(ScenarioError::BadStepLimit);
        }
        if self.host_to_host_types > 2 || self.host_to_subnet_types > 1 || self.on_host_types > 2 {
            return Err(ScenarioError::BadActionTypeCounts);
        }
        if self.total_actions() == 0 {
            return Err(ScenarioError::EmptyCatalog);
        }
        Ok(())
    }

    /// Closed-form catalog size: `m*p*(p-1) + n*p*q + o*p`.
    pub fn total_actions(&self) -> usize {
        let p = self.hosts;
        let q = self.subnets;
        self.host_to_host_types * p * p.saturating_sub(1)
            + self.host_to_subnet_types * p * q
            + self.on_host_types * p
    }

    /// Enumerates the catalog in the documented order: host-to-host types
    /// (ServiceScan then ExploitSSH; source-major, then target, skipping
    /// target == source), host-to-subnet (SubnetScan; source-major, then
    /// subnet), on-host (OSInfo then PassiveObserve; by host). Ids are
    /// assigned in this order starting at 0.
    pub fn action_catalog(&self) -> Vec<Action> {
        let p = self.hosts;
        let q = self.subnets;
        let mut catalog = Vec::with_capacity(self.total_actions());
        for kind in 0..self.host_to_host_types {
            for src in 0..p {
                for target in 0..p {
                    if target == src {
                        continue;
                    }
                    catalog.push(match kind {
                        0 => Action::ServiceScan { src, target },
                        _ => Action::ExploitSsh { src, target },
                    });
                }
            }
        }
        for _ in 0..self.host_to_subnet_types {
            for src in 0..p {
                for subnet in 0..q {
                    catalog.push(Action::SubnetScan { src, subnet });
                }
            }
        }
        for kind in 0..self.on_host_types {
            for host in 0..p {
                catalog.push(match kind {
                    0 => Action::OsInfo { host },
                    _ => Action::PassiveObserve { host },
                });
            }
        }
        catalog
    }

    /// Chain adjacency: subnet i talks to i-1 and i+1 (and itself).
    pub fn chain_adjacency(subnets: usize) -> Vec<Vec<bool>> {
        (0..subnets)
            .map(|a| {
                (0..subnets)
                    .map(|b| a == b || a + 1 == b || b + 1 == a)
                    .collect()
            })
            .collect()
    }

    /// Star adjacency: subnet 0 talks to every other subnet.
    pub fn star_adjacency(subnets: usize) -> Vec<Vec<bool>> {
        (0..subnets)
            .map(|a| (0..subnets).map(|b| a == b || a == 0 || b == 0).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_spec() -> ScenarioSpec {
        ScenarioSpec {
            name: "test".into(),
            hosts: 6,
            subnets: 2,
            subnet_of: vec![0, 0, 0, 1, 1, 1],
            adjacency: ScenarioSpec::chain_adjacency(2),
            flag_hosts: BTreeSet::from([4]),
            foothold: 0,
            exploit_prob: 1.0,
            step_limit: 100,
            host_to_host_types: 2,
            host_to_subnet_types: 1,
            on_host_types: 2,
            rewards: RewardScheme::default(),
        }
    }

    #[test]
    fn six_host_catalog_has_84_actions() {
        let spec = base_spec();
        spec.validate().unwrap();
        assert_eq!(spec.total_actions(), 84); // 2*6*5 + 1*6*2 + 2*6
        assert_eq!(spec.action_catalog().len(), 84);
    }

    #[test]
    fn single_host_single_type_catalog() {
        let spec = ScenarioSpec {
            hosts: 1,
            subnets: 1,
            subnet_of: vec![0],
            adjacency: vec![vec![true]],
            // Degenerate count-only config: the flag invariant still needs a
            // non-foothold host, so this spec is only used for arithmetic.
            flag_hosts: BTreeSet::from([0]),
            foothold: 0,
            host_to_host_types: 0,
            host_to_subnet_types: 0,
            on_host_types: 1,
            ..base_spec()
        };
        assert_eq!(spec.total_actions(), 1);
        assert_eq!(spec.action_catalog(), vec![Action::OsInfo { host: 0 }]);
    }

    #[test]
    fn twenty_four_host_count_formula() {
        let spec = ScenarioSpec {
            hosts: 24,
            subnets: 8,
            subnet_of: (0..24).map(|h| h / 3).collect(),
            adjacency: ScenarioSpec::chain_adjacency(8),
            flag_hosts: BTreeSet::from([23]),
            host_to_host_types: 1,
            host_to_subnet_types: 1,
            on_host_types: 1,
            ..base_spec()
        };
        spec.validate().unwrap();
        assert_eq!(spec.total_actions(), 768); // 24*23 + 24*8 + 24
        assert_eq!(spec.action_catalog().len(), 768);
    }

    #[test]
    fn validation_names_the_violated_invariant() {
        let mut spec = base_spec();
        spec.hosts = 0;
        spec.subnet_of.clear();
        assert_eq!(spec.validate().unwrap_err(), ScenarioError::NoHosts);

        let mut spec = base_spec();
        spec.flag_hosts.clear();
        assert_eq!(spec.validate().unwrap_err(), ScenarioError::NoFlags);

        let mut spec = base_spec();
        spec.foothold = 9;
        assert_eq!(
            spec.validate().unwrap_err(),
            ScenarioError::FootholdOutOfRange(9)
        );

        let mut spec = base_spec();
        spec.foothold = 4;
        assert_eq!(
            spec.validate().unwrap_err(),
            ScenarioError::FootholdIsFlag(4)
        );

        let mut spec = base_spec();
        spec.adjacency[0][1] = false;
        assert_eq!(
            spec.validate().unwrap_err(),
            ScenarioError::AsymmetricAdjacency { a: 0, b: 1 }
        );

        let mut spec = base_spec();
        spec.adjacency[1][1] = false;
        assert_eq!(
            spec.validate().unwrap_err(),
            ScenarioError::MissingSelfAdjacency(1)
        );

        let mut spec = base_spec();
        spec.exploit_prob = 0.0;
        assert!(matches!(
            spec.validate().unwrap_err(),
            ScenarioError::BadExploitProb(_)
        ));
    }

    #[test]
    fn catalog_order_is_stable() {
        let spec = base_spec();
        let catalog = spec.action_catalog();
        assert_eq!(catalog[0], Action::ServiceScan { src: 0, target: 1 });
        assert_eq!(catalog[30], Action::ExploitSsh { src: 0, target: 1 });
        assert_eq!(catalog[60], Action::SubnetScan { src: 0, subnet: 0 });
        assert_eq!(catalog[72], Action::OsInfo { host: 0 });
        assert_eq!(catalog[78], Action::PassiveObserve { host: 0 });
    }
}
