//! The one-level agent group must be byte-for-byte the conventional
//! single dueling-DQN training path: same targets, same loss, same
//! parameter trajectory.

use hadrl_core::action_algebra::DecompositionPlan;
use hadrl_core::agents::{build_baseline, GroupConfig, ReplayBuffer, SampledBatch, Transition};
use hadrl_core::nn::{
    optimizer_step, OptimizerMode, OptimizerState, QNetwork, TargetNetwork,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const ACTIONS: usize = 12;
const OBS: usize = 8;
const GAMMA: f64 = 0.97;
const LR: f64 = 1e-3;
const SYNC: u64 = 25;

fn synthetic_batches(count: usize, batch_size: usize, seed: u64) -> Vec<SampledBatch> {
    let plan = DecompositionPlan::single_level(ACTIONS).unwrap();
    let mut buffer = ReplayBuffer::new(plan.clone(), 512);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    for _ in 0..512 {
        let action = rng.gen_range(0..ACTIONS);
        buffer
            .push(Transition {
                state: (0..OBS).map(|_| rng.gen::<f64>()).collect(),
                primitive_actions: plan.decompose(action).unwrap(),
                composed_action: action,
                reward: rng.gen::<f64>() * 2.0 - 0.5,
                next_state: (0..OBS).map(|_| rng.gen::<f64>()).collect(),
                terminal: rng.gen::<f64>() < 0.1,
            })
            .unwrap();
    }
    (0..count)
        .map(|_| buffer.sample_batch(batch_size, &mut rng).unwrap())
        .collect()
}

/// Plain single-agent dueling DQN, written against the network primitives
/// directly (no agent group machinery).
struct DirectDqn {
    net: QNetwork,
    target: TargetNetwork,
    optimizer: OptimizerState,
    updates: u64,
}

impl DirectDqn {
    fn update(&mut self, batch: &SampledBatch) -> f64 {
        let next_q = self.target.forward_batch(batch.next_states.view()).unwrap();
        let targets: Vec<f64> = (0..batch.len())
            .map(|k| {
                if batch.terminal[k] {
                    batch.rewards[k]
                } else {
                    let max = next_q.row(k).iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    batch.rewards[k] + GAMMA * max
                }
            })
            .collect();
        let (loss, grads) = self
            .net
            .td_loss_and_grads(batch.states.view(), &batch.digits[0], &targets)
            .unwrap();
        optimizer_step(&mut self.net, &grads, &mut self.optimizer, LR).unwrap();
        self.updates += 1;
        if self.updates % SYNC == 0 {
            self.target.sync_from(&self.net).unwrap();
        }
        loss
    }
}

#[test]
fn one_level_group_matches_direct_dqn_bit_for_bit() {
    let config = GroupConfig {
        gamma: GAMMA,
        lr: LR,
        sync_period: SYNC,
        optimizer: OptimizerMode::Adam,
        double_dqn: false,
        trunk: vec![16],
        value_hidden: Some(8),
    };
    let mut group = build_baseline(ACTIONS, OBS, &config, 42).unwrap();
    let mut direct = DirectDqn {
        net: group.agents()[0].net().clone(),
        target: TargetNetwork::of(group.agents()[0].net()),
        optimizer: OptimizerState::new(OptimizerMode::Adam, group.agents()[0].net()),
        updates: 0,
    };

    for (i, batch) in synthetic_batches(200, 16, 7).iter().enumerate() {
        let group_loss = group.update_all(batch, false).unwrap()[0];
        let direct_loss = direct.update(batch);
        assert_eq!(
            group_loss.to_bits(),
            direct_loss.to_bits(),
            "losses diverge at update {i}: {group_loss} vs {direct_loss}"
        );
    }
    assert_eq!(group.agents()[0].net(), &direct.net);
}
