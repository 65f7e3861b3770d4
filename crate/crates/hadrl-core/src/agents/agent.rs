//! One DQN learner per decomposition level.

use ndarray::ArrayView2;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::action_algebra::PlanError;
use crate::nn::{
    optimizer_step, Architecture, NnError, OptimizerMode, OptimizerState, QNetwork, TargetNetwork,
};

use super::replay::SampledBatch;

#[derive(Debug, Error, PartialEq)]
pub enum AgentError {
    #[error("transition stores composed action {composed}, digits compose to {expected}")]
    TransitionMismatch { composed: usize, expected: usize },
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Per-level learner: online network, delayed target copy, optimizer
/// state, and the level's primitive action count.
#[derive(Debug, Clone)]
pub struct Agent {
    level: usize,
    action_count: usize,
    net: QNetwork,
    target: TargetNetwork,
    optimizer: OptimizerState,
    lr: f64,
    sync_period: u64,
    updates: u64,
    double_dqn: bool,
}

impl Agent {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        level: usize,
        action_count: usize,
        input_width: usize,
        trunk: &[usize],
        value_hidden: Option<usize>,
        optimizer: OptimizerMode,
        lr: f64,
        sync_period: u64,
        double_dqn: bool,
        seed: u64,
    ) -> Result<Self, AgentError> {
        let mut layers = Vec::with_capacity(trunk.len() + 1);
        layers.push(input_width);
        layers.extend_from_slice(trunk);
        let arch = Architecture {
            layers,
            value_hidden,
            actions: action_count,
        };
        let net = QNetwork::init(&arch, seed)?;
        let target = TargetNetwork::of(&net);
        let optimizer = OptimizerState::new(optimizer, &net);
        Ok(Self {
            level,
            action_count,
            net,
            target,
            optimizer,
            lr,
            sync_period,
            updates: 0,
            double_dqn,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn net(&self) -> &QNetwork {
        &self.net
    }

    pub fn target(&self) -> &TargetNetwork {
        &self.target
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub(crate) fn set_updates(&mut self, updates: u64) {
        self.updates = updates;
    }

    /// Swaps in a new parameter set, resetting the target copy and the
    /// optimizer moments to match.
    pub fn replace_net(&mut self, net: QNetwork) {
        self.target = TargetNetwork::of(&net);
        self.optimizer = OptimizerState::new(self.optimizer.mode(), &net);
        self.net = net;
    }

    /// Epsilon-greedy primitive action: uniform with probability `eps`,
    /// otherwise argmax of the online network with ties broken toward the
    /// lowest index.
    pub fn select_primitive(&self, state: &[f64], eps: f64, rng: &mut ChaCha20Rng) -> usize {
        if rng.gen::<f64>() < eps {
            rng.gen_range(0..self.action_count)
        } else {
            let q = self.net.forward(state).expect("state width fixed per run");
            argmax_lowest(&q)
        }
    }

    /// TD targets against the target network: `y = r` on terminal
    /// transitions, else `r + gamma * max_a q_target(s')[a]` (or the
    /// double-DQN variant when configured).
    pub fn td_targets(&self, batch: &SampledBatch, gamma: f64) -> Vec<f64> {
        let next_q = self
            .target
            .forward_batch(batch.next_states.view())
            .expect("batch width fixed per run");
        let online_next = self.double_dqn.then(|| {
            self.net
                .forward_batch(batch.next_states.view())
                .expect("batch width fixed per run")
        });
        (0..batch.len())
            .map(|k| {
                if batch.terminal[k] {
                    batch.rewards[k]
                } else {
                    let row = next_q.row(k);
                    let bootstrap = match &online_next {
                        Some(online) => row[argmax_lowest(online.row(k).as_slice().unwrap())],
                        None => row.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
                    };
                    batch.rewards[k] + gamma * bootstrap
                }
            })
            .collect()
    }

    /// One training step on this level's primitive actions from the shared
    /// batch; syncs the target every `sync_period` updates.
    pub fn update(&mut self, batch: &SampledBatch, gamma: f64) -> Result<f64, AgentError> {
        let targets = self.td_targets(batch, gamma);
        let actions = &batch.digits[self.level];
        let (loss, grads) =
            self.net
                .td_loss_and_grads(batch.states.view(), actions, &targets)?;
        optimizer_step(&mut self.net, &grads, &mut self.optimizer, self.lr)?;
        self.updates += 1;
        if self.sync_period > 0 && self.updates % self.sync_period == 0 {
            self.target.sync_from(&self.net)?;
        }
        Ok(loss)
    }

    /// Loss of a batch without applying any update (test hook).
    pub fn peek_loss(&self, batch: &SampledBatch, gamma: f64) -> Result<f64, AgentError> {
        let targets = self.td_targets(batch, gamma);
        let actions = &batch.digits[self.level];
        let states: ArrayView2<f64> = batch.states.view();
        let (loss, _) = self.net.td_loss_and_grads(states, actions, &targets)?;
        Ok(loss)
    }
}

/// Argmax with ties broken toward the lowest index.
pub fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
