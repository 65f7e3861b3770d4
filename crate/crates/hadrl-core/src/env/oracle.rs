//! Breadth-first shortest-path oracle over the deterministic transition
//! graph (exploit success probability forced to 1).
//!
//! Host progress is monotone, so the search runs on a compact abstract
//! state: two bits per host encoding unknown / discovered / scanned /
//! compromised. The `os_known` and subnet-reachable bits gate no action
//! and earn no reward, and same-effect actions (any valid source for the
//! same target) collapse to one edge; the quotient preserves shortest
//! step counts and path returns exactly. Flag capture coincides with
//! compromising the flag host.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use super::scenario::ScenarioSpec;

pub const DEFAULT_STATE_BUDGET: usize = 1_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("oracle supports at most 64 hosts, scenario has {0}")]
    TooManyHosts(usize),
    #[error("abstract state space exceeds the budget of {budget} states")]
    OverBudget { budget: usize },
    #[error("flags cannot all be captured from the foothold (explored {explored} states)")]
    UnreachableFlags { explored: usize },
    #[error("shortest capture needs {needed} steps but the step limit is {limit}")]
    OverStepLimit { needed: usize, limit: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    /// Fewest environment steps from reset to all flags captured.
    pub min_steps: usize,
    /// Highest episode return among minimum-step paths (flag rewards plus
    /// pivot rewards; optimal paths take no penalties).
    pub max_return: f64,
}

const UNKNOWN: u8 = 0;
const DISCOVERED: u8 = 1;
const SCANNED: u8 = 2;
const COMPROMISED: u8 = 3;

struct Search<'a> {
    spec: &'a ScenarioSpec,
    subnet_hosts: Vec<Vec<usize>>,
    flag_mask: u128,
}

fn level(key: u128, host: usize) -> u8 {
    ((key >> (2 * host)) & 0b11) as u8
}

fn with_level(key: u128, host: usize, lvl: u8) -> u128 {
    (key & !(0b11u128 << (2 * host))) | ((lvl as u128) << (2 * host))
}

impl<'a> Search<'a> {
    fn new(spec: &'a ScenarioSpec) -> Self {
        let mut subnet_hosts = vec![Vec::new(); spec.subnets];
        for (h, &s) in spec.subnet_of.iter().enumerate() {
            subnet_hosts[s].push(h);
        }
        let mut flag_mask = 0u128;
        for &f in &spec.flag_hosts {
            flag_mask |= 0b11u128 << (2 * f);
        }
        Self {
            spec,
            subnet_hosts,
            flag_mask,
        }
    }

    fn start(&self) -> u128 {
        with_level(0, self.spec.foothold, COMPROMISED)
    }

    fn is_goal(&self, key: u128) -> bool {
        // Every flag host at level 3 (both bits set).
        key & self.flag_mask == self.flag_mask
    }

    /// Successors one environment step away, with the step's reward.
    fn successors(&self, key: u128) -> Vec<(u128, f64)> {
        let spec = self.spec;
        let p = spec.hosts;
        let mut out = Vec::new();

        let mut subnet_has_compromised = vec![false; spec.subnets];
        let mut any_compromised = false;
        for h in 0..p {
            if level(key, h) == COMPROMISED {
                subnet_has_compromised[spec.subnet_of[h]] = true;
                any_compromised = true;
            }
        }
        if !any_compromised {
            return out;
        }

        // Discover all hosts of a subnet: SubnetScan from any compromised
        // host in an adjacent (or the same) subnet, or PassiveObserve from
        // a compromised host inside it.
        for subnet in 0..spec.subnets {
            let scan_source = spec.host_to_subnet_types >= 1
                && (0..spec.subnets)
                    .any(|s| subnet_has_compromised[s] && spec.adjacency[s][subnet]);
            let observe_source = spec.on_host_types >= 2 && subnet_has_compromised[subnet];
            if !(scan_source || observe_source) {
                continue;
            }
            let mut next = key;
            for &h in &self.subnet_hosts[subnet] {
                if level(next, h) == UNKNOWN {
                    next = with_level(next, h, DISCOVERED);
                }
            }
            if next != key {
                out.push((next, 0.0));
            }
        }

        // ServiceScan a discovered host (any compromised source works).
        if spec.host_to_host_types >= 1 {
            for t in 0..p {
                if level(key, t) == DISCOVERED {
                    out.push((with_level(key, t, SCANNED), 0.0));
                }
            }
        }

        // ExploitSSH a scanned host from a compromised host in an adjacent
        // (or the same) subnet.
        if spec.host_to_host_types >= 2 {
            for t in 0..p {
                if level(key, t) != SCANNED {
                    continue;
                }
                let reachable = (0..spec.subnets)
                    .any(|s| subnet_has_compromised[s] && spec.adjacency[s][spec.subnet_of[t]]);
                if !reachable {
                    continue;
                }
                let reward = if spec.flag_hosts.contains(&t) {
                    spec.rewards.flag
                } else {
                    spec.rewards.pivot
                };
                out.push((with_level(key, t, COMPROMISED), reward));
            }
        }

        out
    }
}

/// Shortest capture length and the best return among shortest paths,
/// assuming deterministic exploits. Errors when flags are unreachable,
/// the shortest path exceeds the scenario step limit, or exploration
/// exceeds `state_budget` abstract states.
pub fn oracle_optimal(
    spec: &ScenarioSpec,
    state_budget: usize,
) -> Result<OracleResult, OracleError> {
    if spec.hosts > 64 {
        return Err(OracleError::TooManyHosts(spec.hosts));
    }
    let search = Search::new(spec);
    let start = search.start();

    let mut dist: HashMap<u128, u32> = HashMap::new();
    let mut queue = VecDeque::new();
    dist.insert(start, 0);
    queue.push_back(start);
    let mut goal_dist: Option<u32> = None;

    while let Some(key) = queue.pop_front() {
        let d = dist[&key];
        if let Some(gd) = goal_dist {
            if d >= gd {
                break; // everything at or past the goal layer is irrelevant
            }
        }
        for (next, _) in search.successors(key) {
            if dist.contains_key(&next) {
                continue;
            }
            if dist.len() >= state_budget {
                return Err(OracleError::OverBudget {
                    budget: state_budget,
                });
            }
            dist.insert(next, d + 1);
            if search.is_goal(next) {
                goal_dist.get_or_insert(d + 1);
            }
            queue.push_back(next);
        }
    }

    let Some(goal_dist) = goal_dist else {
        return Err(OracleError::UnreachableFlags {
            explored: dist.len(),
        });
    };
    let min_steps = goal_dist as usize;
    if min_steps > spec.step_limit {
        return Err(OracleError::OverStepLimit {
            needed: min_steps,
            limit: spec.step_limit,
        });
    }

    // Best return over exactly-shortest paths: walk layers backwards from
    // the goal layer.
    let mut by_layer: Vec<Vec<u128>> = vec![Vec::new(); min_steps + 1];
    for (&key, &d) in &dist {
        if (d as usize) <= min_steps {
            by_layer[d as usize].push(key);
        }
    }
    let mut value: HashMap<u128, f64> = HashMap::new();
    for &key in &by_layer[min_steps] {
        if search.is_goal(key) {
            value.insert(key, 0.0);
        }
    }
    for d in (0..min_steps).rev() {
        for &key in &by_layer[d] {
            let mut best: Option<f64> = None;
            for (next, reward) in search.successors(key) {
                if dist.get(&next) == Some(&(d as u32 + 1)) {
                    if let Some(&v) = value.get(&next) {
                        let candidate = reward + v;
                        if best.is_none_or(|b| candidate > b) {
                            best = Some(candidate);
                        }
                    }
                }
            }
            if let Some(b) = best {
                value.insert(key, b);
            }
        }
    }

    let max_return = *value
        .get(&start)
        .expect("start reaches the goal layer by construction");
    Ok(OracleResult {
        min_steps,
        max_return,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::presets::preset;
    use std::collections::BTreeSet;

    #[test]
    fn tiny_needs_three_steps_for_ten_points() {
        let spec = preset("tiny").unwrap();
        let result = oracle_optimal(&spec, DEFAULT_STATE_BUDGET).unwrap();
        assert_eq!(result.min_steps, 3); // SubnetScan, ServiceScan, ExploitSSH
        assert_eq!(result.max_return, 10.0);
    }

    #[test]
    fn optimal_paths_take_no_penalties() {
        // Return decomposes into flag and pivot rewards only.
        let spec = preset("mid").unwrap();
        let result = oracle_optimal(&spec, DEFAULT_STATE_BUDGET).unwrap();
        let flags = spec.flag_hosts.len() as f64;
        let pivots = (result.max_return - 10.0 * flags) / 0.2;
        assert!(pivots >= -1e-9, "negative pivot count {pivots}");
        assert!(
            (pivots - pivots.round()).abs() < 1e-9,
            "return is not flags + k pivots: {}",
            result.max_return
        );
    }

    #[test]
    fn mid_preset_shortest_path_is_six_steps() {
        // Scan subnet 1, take the first flag, pivot through it into
        // subnet 2, take the second.
        let spec = preset("mid").unwrap();
        let result = oracle_optimal(&spec, DEFAULT_STATE_BUDGET).unwrap();
        assert_eq!(result.min_steps, 6);
        assert_eq!(result.max_return, 20.0);
    }

    #[test]
    fn two_flags_in_different_subnets_cost_more_steps() {
        let single = preset("tiny").unwrap();
        let mut double = single.clone();
        double.flag_hosts = BTreeSet::from([1, 4]); // subnet 0 and subnet 1
        let a = oracle_optimal(&single, DEFAULT_STATE_BUDGET).unwrap();
        let b = oracle_optimal(&double, DEFAULT_STATE_BUDGET).unwrap();
        assert!(b.min_steps > a.min_steps);
        assert_eq!(b.max_return, 20.0);
    }

    #[test]
    fn disconnected_flag_is_unreachable() {
        let mut spec = preset("tiny").unwrap();
        spec.adjacency = vec![vec![true, false], vec![false, true]];
        assert!(matches!(
            oracle_optimal(&spec, DEFAULT_STATE_BUDGET),
            Err(OracleError::UnreachableFlags { .. })
        ));
    }

    #[test]
    fn tight_budget_is_a_resource_error() {
        let spec = preset("tiny").unwrap();
        assert_eq!(
            oracle_optimal(&spec, 2),
            Err(OracleError::OverBudget { budget: 2 })
        );
    }

    #[test]
    fn step_limit_gates_the_result() {
        let mut spec = preset("tiny").unwrap();
        spec.step_limit = 2;
        assert_eq!(
            oracle_optimal(&spec, DEFAULT_STATE_BUDGET),
            Err(OracleError::OverStepLimit {
                needed: 3,
                limit: 2
            })
        );
    }
}
