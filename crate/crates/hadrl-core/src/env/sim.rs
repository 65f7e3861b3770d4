//! Episode state machine: reset, step semantics, observation encoding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use super::scenario::{Action, ScenarioError, ScenarioSpec};

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("step called on a terminal episode")]
    StepAfterTerminal,
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Flat numeric state vector of length `4*hosts + subnets`: per host
/// [discovered, service_scanned, os_known, compromised], then one
/// reachable bit per subnet. Entries are 0.0 or 1.0. Flag placement is
/// deliberately absent.
pub type Observation = Vec<f64>;

/// Step outcome details, mainly for diagnostics and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub action_id: usize,
    /// None when the id falls in the decomposition dead zone.
    pub action: Option<Action>,
    /// Preconditions held and the action was applied (exploit rolls that
    /// fail still count as valid attempts).
    pub valid: bool,
    pub flags_captured: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct EpisodeState {
    discovered: Vec<bool>,
    service_scanned: Vec<bool>,
    os_known: Vec<bool>,
    compromised: Vec<bool>,
    reachable: Vec<bool>,
    steps: usize,
    flags_captured: Vec<bool>,
    terminal: bool,
}

/// One seedable environment instance, exclusively owned by its rollout loop.
#[derive(Debug, Clone)]
pub struct PentestEnv {
    spec: ScenarioSpec,
    catalog: Vec<Action>,
    state: EpisodeState,
    rng: ChaCha20Rng,
}

impl PentestEnv {
    pub fn new(spec: ScenarioSpec) -> Result<Self, EnvError> {
        spec.validate()?;
        let catalog = spec.action_catalog();
        let mut env = Self {
            state: EpisodeState {
                discovered: vec![false; spec.hosts],
                service_scanned: vec![false; spec.hosts],
                os_known: vec![false; spec.hosts],
                compromised: vec![false; spec.hosts],
                reachable: vec![false; spec.subnets],
                steps: 0,
                flags_captured: vec![false; spec.hosts],
                terminal: false,
            },
            catalog,
            rng: ChaCha20Rng::seed_from_u64(0),
            spec,
        };
        env.reset(0);
        Ok(env)
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn total_actions(&self) -> usize {
        self.catalog.len()
    }

    pub fn catalog(&self) -> &[Action] {
        &self.catalog
    }

    pub fn observation_width(&self) -> usize {
        4 * self.spec.hosts + self.spec.subnets
    }

    pub fn steps_taken(&self) -> usize {
        self.state.steps
    }

    pub fn is_terminal(&self) -> bool {
        self.state.terminal
    }

    pub fn flags_captured(&self) -> usize {
        self.state.flags_captured.iter().filter(|&&c| c).count()
    }

    /// Clears every bit except the foothold (compromised, discovered, its
    /// subnet reachable) and reseeds the per-instance RNG.
    pub fn reset(&mut self, seed: u64) -> Observation {
        let p = self.spec.hosts;
        self.state = EpisodeState {
            discovered: vec![false; p],
            service_scanned: vec![false; p],
            os_known: vec![false; p],
            compromised: vec![false; p],
            reachable: vec![false; self.spec.subnets],
            steps: 0,
            flags_captured: vec![false; p],
            terminal: false,
        };
        let foothold = self.spec.foothold;
        self.state.discovered[foothold] = true;
        self.state.compromised[foothold] = true;
        self.state.reachable[self.spec.subnet_of[foothold]] = true;
        self.rng = ChaCha20Rng::seed_from_u64(seed);
        self.observation()
    }

    pub fn observation(&self) -> Observation {
        let mut obs = Vec::with_capacity(self.observation_width());
        for h in 0..self.spec.hosts {
            obs.push(bit(self.state.discovered[h]));
            obs.push(bit(self.state.service_scanned[h]));
            obs.push(bit(self.state.os_known[h]));
            obs.push(bit(self.state.compromised[h]));
        }
        for s in 0..self.spec.subnets {
            obs.push(bit(self.state.reachable[s]));
        }
        obs
    }

    /// Applies one catalog action (or a dead-zone id). Unmet preconditions
    /// and dead-zone ids cost the invalid penalty and change nothing.
    /// Exploit attempts roll the per-instance RNG; failures change nothing
    /// and reward the failed-exploit constant.
    pub fn step(&mut self, action_id: usize) -> Result<(Observation, f64, bool, StepInfo), EnvError> {
        if self.state.terminal {
            return Err(EnvError::StepAfterTerminal);
        }
        let rewards = self.spec.rewards.clone();
        let mut info = StepInfo {
            action_id,
            action: self.catalog.get(action_id).copied(),
            valid: false,
            flags_captured: 0,
        };

        let reward = match info.action {
            None => rewards.invalid,
            Some(action) => {
                if self.preconditions_hold(action) {
                    info.valid = true;
                    self.apply(action, &rewards)
                } else {
                    rewards.invalid
                }
            }
        };

        self.state.steps += 1;
        let all_flags = self
            .spec
            .flag_hosts
            .iter()
            .all(|&h| self.state.flags_captured[h]);
        if all_flags || self.state.steps >= self.spec.step_limit {
            self.state.terminal = true;
        }
        info.flags_captured = self.flags_captured();
        Ok((self.observation(), reward, self.state.terminal, info))
    }

    fn preconditions_hold(&self, action: Action) -> bool {
        let st = &self.state;
        match action {
            Action::SubnetScan { src, subnet } => {
                st.compromised[src] && self.spec.adjacency[self.spec.subnet_of[src]][subnet]
            }
            Action::ServiceScan { src, target } => st.compromised[src] && st.discovered[target],
            Action::ExploitSsh { src, target } => {
                st.compromised[src]
                    && st.service_scanned[target]
                    && !st.compromised[target]
                    && self.spec.adjacency[self.spec.subnet_of[src]][self.spec.subnet_of[target]]
            }
            Action::OsInfo { host } => st.compromised[host],
            Action::PassiveObserve { host } => st.compromised[host],
        }
    }

    fn apply(&mut self, action: Action, rewards: &super::scenario::RewardScheme) -> f64 {
        match action {
            Action::SubnetScan { subnet, .. } => {
                for h in 0..self.spec.hosts {
                    if self.spec.subnet_of[h] == subnet {
                        self.state.discovered[h] = true;
                    }
                }
                self.state.reachable[subnet] = true;
                0.0
            }
            Action::ServiceScan { target, .. } => {
                self.state.service_scanned[target] = true;
                0.0
            }
            Action::ExploitSsh { target, .. } => {
                let roll: f64 = self.rng.gen();
                if roll < self.spec.exploit_prob {
                    self.state.compromised[target] = true;
                    self.state.discovered[target] = true;
                    if self.spec.flag_hosts.contains(&target) && !self.state.flags_captured[target]
                    {
                        self.state.flags_captured[target] = true;
                        rewards.flag
                    } else {
                        rewards.pivot
                    }
                } else {
                    rewards.failed_exploit
                }
            }
            Action::OsInfo { host } => {
                self.state.os_known[host] = true;
                0.0
            }
            Action::PassiveObserve { host } => {
                let subnet = self.spec.subnet_of[host];
                for h in 0..self.spec.hosts {
                    if self.spec.subnet_of[h] == subnet {
                        self.state.discovered[h] = true;
                    }
                }
                0.0
            }
        }
    }
}

fn bit(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::presets::preset;
    use std::collections::BTreeSet;

    fn tiny() -> PentestEnv {
        PentestEnv::new(preset("tiny").unwrap()).unwrap()
    }

    /// Id of an action in the tiny catalog.
    fn action_id(env: &PentestEnv, wanted: Action) -> usize {
        env.catalog().iter().position(|&a| a == wanted).unwrap()
    }

    #[test]
    fn reset_exposes_exactly_the_foothold() {
        let mut env = tiny();
        let obs = env.reset(123);
        let p = env.spec().hosts;
        let compromised: f64 = (0..p).map(|h| obs[4 * h + 3]).sum();
        let reachable: f64 = obs[4 * p..].iter().sum();
        assert_eq!(compromised, 1.0);
        assert_eq!(reachable, 1.0);
        assert_eq!(obs.len(), 4 * p + env.spec().subnets);
    }

    #[test]
    fn observation_has_no_flag_bit() {
        // Two scenarios differing only in flag placement observe identically
        // until the first capture.
        let mut a = tiny();
        let mut spec_b = preset("tiny").unwrap();
        spec_b.flag_hosts = BTreeSet::from([5]);
        let mut b = PentestEnv::new(spec_b).unwrap();
        let obs_a = a.reset(7);
        let obs_b = b.reset(7);
        assert_eq!(obs_a, obs_b);
        // Walk both through the same discovery path (no captures).
        for id in [
            action_id(&a, Action::SubnetScan { src: 0, subnet: 1 }),
            action_id(&a, Action::ServiceScan { src: 0, target: 3 }),
            action_id(&a, Action::OsInfo { host: 0 }),
        ] {
            let (oa, ra, _, _) = a.step(id).unwrap();
            let (ob, rb, _, _) = b.step(id).unwrap();
            assert_eq!(oa, ob);
            assert_eq!(ra, rb);
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let mut env = tiny();
        let script: Vec<usize> = (0..60).map(|i| (i * 13 + 5) % 84).collect();
        let run = |env: &mut PentestEnv| {
            env.reset(99);
            script
                .iter()
                .map(|&id| {
                    if env.is_terminal() {
                        (vec![], -2.0, true)
                    } else {
                        let (o, r, d, _) = env.step(id).unwrap();
                        (o, r, d)
                    }
                })
                .collect::<Vec<_>>()
        };
        let first = run(&mut env);
        let second = run(&mut env);
        assert_eq!(first, second);
    }

    #[test]
    fn capture_path_and_rewards() {
        let mut env = tiny();
        env.reset(1);
        // SubnetScan(0 -> subnet 1) discovers hosts 3..6.
        let (obs, r, done, info) =
            env.step(action_id(&env, Action::SubnetScan { src: 0, subnet: 1 })).unwrap();
        assert_eq!(r, 0.0);
        assert!(!done);
        assert!(info.valid);
        assert_eq!(obs[4 * 4], 1.0); // host 4 discovered

        let (_, r, _, _) =
            env.step(action_id(&env, Action::ServiceScan { src: 0, target: 4 })).unwrap();
        assert_eq!(r, 0.0);

        // Flag host, deterministic exploit: +10 and terminal (single flag).
        let (_, r, done, info) =
            env.step(action_id(&env, Action::ExploitSsh { src: 0, target: 4 })).unwrap();
        assert_eq!(r, 10.0);
        assert!(done);
        assert_eq!(info.flags_captured, 1);
    }

    #[test]
    fn unmet_precondition_penalty_leaves_state_unchanged() {
        let mut env = tiny();
        let obs0 = env.reset(5);
        // ExploitSSH without a prior service scan.
        let (obs, r, done, info) =
            env.step(action_id(&env, Action::ExploitSsh { src: 0, target: 4 })).unwrap();
        assert_eq!(r, -0.1);
        assert!(!info.valid);
        assert!(!done);
        assert_eq!(obs, obs0);
    }

    #[test]
    fn dead_zone_id_is_invalid() {
        let mut env = tiny();
        let obs0 = env.reset(5);
        let (obs, r, _, info) = env.step(84).unwrap();
        assert_eq!(r, -0.1);
        assert_eq!(info.action, None);
        assert_eq!(obs, obs0);
    }

    #[test]
    fn service_scan_is_idempotent() {
        let mut env = tiny();
        env.reset(5);
        env.step(action_id(&env, Action::SubnetScan { src: 0, subnet: 0 })).unwrap();
        let scan = action_id(&env, Action::ServiceScan { src: 0, target: 1 });
        let (obs1, r1, _, _) = env.step(scan).unwrap();
        assert_eq!(r1, 0.0);
        assert_eq!(obs1[4 * 1 + 1], 1.0);
        let (obs2, r2, _, _) = env.step(scan).unwrap();
        assert_eq!(r2, 0.0);
        assert_eq!(obs1[..], obs2[..]);
    }

    #[test]
    fn reexploiting_a_compromised_host_is_invalid() {
        let mut spec = preset("tiny").unwrap();
        spec.flag_hosts = BTreeSet::from([4, 5]);
        let mut env = PentestEnv::new(spec).unwrap();
        env.reset(3);
        env.step(action_id(&env, Action::SubnetScan { src: 0, subnet: 1 })).unwrap();
        env.step(action_id(&env, Action::ServiceScan { src: 0, target: 4 })).unwrap();
        let exploit = action_id(&env, Action::ExploitSsh { src: 0, target: 4 });
        let (_, r, _, _) = env.step(exploit).unwrap();
        assert_eq!(r, 10.0);
        let (_, r, _, info) = env.step(exploit).unwrap();
        assert_eq!(r, -0.1);
        assert!(!info.valid);
    }

    #[test]
    fn failed_exploit_changes_nothing() {
        let mut spec = preset("tiny").unwrap();
        spec.exploit_prob = 1e-12; // effectively always fails
        let mut env = PentestEnv::new(spec).unwrap();
        env.reset(2);
        env.step(action_id(&env, Action::SubnetScan { src: 0, subnet: 1 })).unwrap();
        let (before, _, _, _) =
            env.step(action_id(&env, Action::ServiceScan { src: 0, target: 4 })).unwrap();
        let (after, r, _, info) =
            env.step(action_id(&env, Action::ExploitSsh { src: 0, target: 4 })).unwrap();
        assert_eq!(r, 0.0);
        assert!(info.valid);
        assert_eq!(before, after);
    }

    #[test]
    fn step_after_terminal_is_a_contract_error() {
        let mut spec = preset("tiny").unwrap();
        spec.step_limit = 1;
        let mut env = PentestEnv::new(spec).unwrap();
        env.reset(0);
        let (_, _, done, _) = env.step(0).unwrap();
        assert!(done);
        assert_eq!(env.step(0).unwrap_err(), EnvError::StepAfterTerminal);
    }

    #[test]
    fn monotone_knowledge_and_reward_partition_under_random_play() {
        let mut env = tiny();
        let mut obs = env.reset(31);
        let mut rng_state = 0x12345u64;
        for _ in 0..5_000 {
            if env.is_terminal() {
                obs = env.reset(rng_state);
            }
            rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let id = (rng_state >> 33) as usize % 90; // includes dead zone
            let (next, r, _, _) = env.step(id).unwrap();
            assert!(
                r == -0.1 || r == 0.0 || r == 0.2 || r == 10.0,
                "reward {r} outside partition"
            );
            for (a, b) in obs.iter().zip(&next) {
                assert!(b >= a, "knowledge bit went backwards");
            }
            obs = next;
        }
    }

    #[test]
    fn episode_return_respects_upper_bound() {
        let mut spec = preset("tiny").unwrap();
        spec.step_limit = 400;
        let flags = spec.flag_hosts.len();
        let hosts = spec.hosts;
        let bound = 10.0 * flags as f64 + 0.2 * (hosts - flags - 1) as f64;
        let mut env = PentestEnv::new(spec).unwrap();
        for seed in 0..20 {
            env.reset(seed);
            let mut ret = 0.0;
            let mut state = seed.wrapping_add(17);
            while !env.is_terminal() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                let id = (state >> 33) as usize % env.total_actions();
                let (_, r, _, _) = env.step(id).unwrap();
                ret += r.max(0.0); // penalties only help the bound
            }
            assert!(ret <= bound + 1e-9, "return {ret} over bound {bound}");
        }
    }
}
