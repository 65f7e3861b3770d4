//! The hierarchical agent group: one learner per level, a shared
//! exploration parameter, and Horner composition of the levels' primitive
//! actions into the environment action.

use rand_chacha::ChaCha20Rng;

use crate::action_algebra::{DecompositionPlan, PrimitiveActionVector};
use crate::nn::OptimizerMode;

use super::agent::{Agent, AgentError};
use super::replay::SampledBatch;

/// Learner hyperparameters shared by every level.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupConfig {
    pub gamma: f64,
    pub lr: f64,
    pub sync_period: u64,
    pub optimizer: OptimizerMode,
    pub double_dqn: bool,
    /// Hidden trunk widths (input width comes from the observation).
    pub trunk: Vec<usize>,
    pub value_hidden: Option<usize>,
}

impl Default for GroupConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lr: 1e-4,
            sync_period: 1000,
            optimizer: OptimizerMode::Adam,
            double_dqn: false,
            trunk: vec![128, 128],
            value_hidden: Some(64),
        }
    }
}

/// One DQN learner per decomposition level plus the shared exploration
/// state. The composed action range equals the plan capacity.
#[derive(Debug, Clone)]
pub struct AgentGroup {
    plan: DecompositionPlan,
    agents: Vec<Agent>,
    gamma: f64,
    epsilon: f64,
}

impl AgentGroup {
    /// Builds one agent per plan level; agent `i` gets head width `β^i`
    /// and its own derived init seed.
    pub fn new(
        plan: DecompositionPlan,
        input_width: usize,
        config: &GroupConfig,
        seed: u64,
    ) -> Result<Self, AgentError> {
        let agents = plan
            .radices()
            .iter()
            .enumerate()
            .map(|(level, &radix)| {
                Agent::new(
                    level,
                    radix,
                    input_width,
                    &config.trunk,
                    config.value_hidden,
                    config.optimizer,
                    config.lr,
                    config.sync_period,
                    config.double_dqn,
                    crate::seeding::derive(seed, level as u64),
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            plan,
            agents,
            gamma: config.gamma,
            epsilon: 1.0,
        })
    }

    pub fn plan(&self) -> &DecompositionPlan {
        &self.plan
    }

    pub fn levels(&self) -> usize {
        self.agents.len()
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn agents_mut(&mut self) -> &mut [Agent] {
        &mut self.agents
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn set_epsilon(&mut self, eps: f64) {
        self.epsilon = eps;
    }

    /// Every level picks its primitive action independently (queried in
    /// level order against the single rng stream), then the digits compose
    /// into the flat action id.
    pub fn select_joint(
        &self,
        state: &[f64],
        eps: f64,
        rng: &mut ChaCha20Rng,
    ) -> (PrimitiveActionVector, usize) {
        let digits: Vec<usize> = self
            .agents
            .iter()
            .map(|agent| agent.select_primitive(state, eps, rng))
            .collect();
        let composed = self
            .plan
            .compose(&digits)
            .expect("per-level selections stay within their radices");
        (PrimitiveActionVector(digits), composed)
    }

    /// One update per agent on the shared batch. Level order when serial;
    /// with `parallel` the per-level updates run on scoped threads (each
    /// touches only its own agent and the read-only batch, so results are
    /// identical to the serial order).
    pub fn update_all(
        &mut self,
        batch: &SampledBatch,
        parallel: bool,
    ) -> Result<Vec<f64>, AgentError> {
        let gamma = self.gamma;
        if !parallel || self.agents.len() == 1 {
            return self
                .agents
                .iter_mut()
                .map(|agent| agent.update(batch, gamma))
                .collect();
        }
        let mut results: Vec<Result<f64, AgentError>> = Vec::new();
        std::thread::scope(|scope| {
            let handles: Vec<_> = self
                .agents
                .iter_mut()
                .map(|agent| scope.spawn(move || agent.update(batch, gamma)))
                .collect();
            results = handles.into_iter().map(|h| h.join().expect("update panicked")).collect();
        });
        results.into_iter().collect()
    }
}

/// The single-agent baseline is literally a one-level group: a degenerate
/// plan whose only radix is the whole action space, then the identical
/// training path.
pub fn build_baseline(
    action_count: usize,
    input_width: usize,
    config: &GroupConfig,
    seed: u64,
) -> Result<AgentGroup, AgentError> {
    let plan = DecompositionPlan::single_level(action_count)?;
    AgentGroup::new(plan, input_width, config, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action_algebra::DecompositionPlan;
    use crate::agents::replay::{ReplayBuffer, Transition};
    use crate::nn::QNetwork;
    use rand::SeedableRng;

    fn small_config() -> GroupConfig {
        GroupConfig {
            trunk: vec![8],
            value_hidden: None,
            optimizer: OptimizerMode::Sgd,
            lr: 0.05,
            sync_period: 100,
            ..GroupConfig::default()
        }
    }

    fn zero_group(radices: Vec<usize>, input_width: usize) -> AgentGroup {
        let capacity: usize = radices.iter().product();
        let plan = DecompositionPlan::from_radices(capacity, radices).unwrap();
        let mut group = AgentGroup::new(plan, input_width, &small_config(), 0).unwrap();
        for agent in group.agents_mut() {
            let arch = agent.net().arch().clone();
            agent.replace_net(QNetwork::zeroed(&arch).unwrap());
        }
        group
    }

    #[test]
    fn joint_selection_composes_by_horner() {
        // Force digits [2, 1] on radices [3, 4]: greedy over nets whose
        // advantage bias prefers those indices.
        let mut group = zero_group(vec![3, 4], 2);
        for (level, wanted) in [(0usize, 2usize), (1usize, 1usize)] {
            let agent = &mut group.agents_mut()[level];
            let arch = agent.net().arch().clone();
            let mut net = QNetwork::zeroed(&arch).unwrap();
            let adv_block = arch.layers.len() - 1;
            net.blocks_mut()[adv_block].b[wanted] = 1.0;
            agent.replace_net(net);
        }
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let (digits, composed) = group.select_joint(&[0.0, 0.0], 0.0, &mut rng);
        assert_eq!(digits.digits(), &[2, 1]);
        assert_eq!(composed, 2 * 4 + 1);
    }

    #[test]
    fn zero_networks_pick_action_zero() {
        let group = zero_group(vec![3, 4], 2);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let (digits, composed) = group.select_joint(&[0.5, -0.5], 0.0, &mut rng);
        assert_eq!(digits.digits(), &[0, 0]);
        assert_eq!(composed, 0);
    }

    #[test]
    fn composed_action_stays_inside_capacity() {
        let plan = DecompositionPlan::plan(84, 10).unwrap();
        let group = AgentGroup::new(plan.clone(), 4, &small_config(), 3).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for step in 0..500 {
            let eps = (step % 11) as f64 / 10.0;
            let (_, composed) = group.select_joint(&[0.1, 0.2, 0.3, 0.4], eps, &mut rng);
            assert!(composed < plan.capacity());
        }
    }

    #[test]
    fn argmax_is_invariant_to_positive_scaling() {
        let plan = DecompositionPlan::plan(20, 5).unwrap();
        let group = AgentGroup::new(plan, 3, &small_config(), 17).unwrap();
        let mut scaled = group.clone();
        for agent in scaled.agents_mut() {
            let mut net = agent.net().clone();
            for block in net.blocks_mut() {
                block.w.mapv_inplace(|w| w * 3.5);
                block.b.mapv_inplace(|b| b * 3.5);
            }
            agent.replace_net(net);
        }
        let state = [0.2, -0.4, 0.9];
        let mut rng_a = ChaCha20Rng::seed_from_u64(5);
        let mut rng_b = ChaCha20Rng::seed_from_u64(5);
        let (da, ca) = group.select_joint(&state, 0.0, &mut rng_a);
        let (db, cb) = scaled.select_joint(&state, 0.0, &mut rng_b);
        assert_eq!(da, db);
        assert_eq!(ca, cb);
    }

    #[test]
    fn baseline_is_a_one_level_group() {
        let group = build_baseline(84, 26, &small_config(), 9).unwrap();
        assert_eq!(group.levels(), 1);
        assert_eq!(group.agents()[0].action_count(), 84);
        assert_eq!(group.plan().capacity(), 84); // no dead zone

        // Joint selection with eps = 0 is plain argmax over all outputs.
        let state = vec![0.0; 26];
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let (digits, composed) = group.select_joint(&state, 0.0, &mut rng);
        let q = group.agents()[0].net().forward(&state).unwrap();
        let expected = super::super::agent::argmax_lowest(&q);
        assert_eq!(digits.digits(), &[expected]);
        assert_eq!(composed, expected);
    }

    #[test]
    fn parallel_updates_match_serial_updates() {
        let plan = DecompositionPlan::from_radices(12, vec![3, 4]).unwrap();
        let mut serial = AgentGroup::new(plan.clone(), 2, &small_config(), 7).unwrap();
        let mut parallel = serial.clone();

        let mut buffer = ReplayBuffer::new(plan.clone(), 64);
        for id in 0..12 {
            buffer
                .push(Transition {
                    state: vec![id as f64 / 12.0, 0.3],
                    primitive_actions: plan.decompose(id).unwrap(),
                    composed_action: id,
                    reward: if id == 7 { 1.0 } else { 0.0 },
                    next_state: vec![id as f64 / 12.0, 0.7],
                    terminal: id % 3 == 0,
                })
                .unwrap();
        }
        let mut rng = ChaCha20Rng::seed_from_u64(33);
        for _ in 0..20 {
            let batch = buffer.sample_batch(8, &mut rng).unwrap();
            let a = serial.update_all(&batch, false).unwrap();
            let b = parallel.update_all(&batch, true).unwrap();
            assert_eq!(a, b);
        }
        for (x, y) in serial.agents().iter().zip(parallel.agents()) {
            assert_eq!(x.net(), y.net());
        }
    }
}
