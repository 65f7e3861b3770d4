//! Shared experience replay: one buffer serves every level, since the
//! stored tuple is the same for all agents except each level's own
//! primitive action.

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

use crate::action_algebra::{DecompositionPlan, PrimitiveActionVector};
use crate::env::Observation;

use super::agent::AgentError;

/// One experience record shared by all agents.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Observation,
    pub primitive_actions: PrimitiveActionVector,
    pub composed_action: usize,
    pub reward: f64,
    pub next_state: Observation,
    pub terminal: bool,
}

/// Bounded ring with strictly FIFO eviction.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    plan: DecompositionPlan,
    items: Vec<Transition>,
    cursor: usize,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(plan: DecompositionPlan, capacity: usize) -> Self {
        assert!(capacity >= 1, "replay buffer needs capacity >= 1");
        Self {
            plan,
            items: Vec::with_capacity(capacity.min(1 << 20)),
            cursor: 0,
            capacity,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn plan(&self) -> &DecompositionPlan {
        &self.plan
    }

    pub fn get(&self, idx: usize) -> &Transition {
        &self.items[idx]
    }

    /// Appends one transition, evicting the oldest when full. Rejects
    /// records whose digits do not compose to the stored action id.
    pub fn push(&mut self, t: Transition) -> Result<(), AgentError> {
        let composed = self
            .plan
            .compose(t.primitive_actions.digits())
            .map_err(AgentError::Plan)?;
        if composed != t.composed_action {
            return Err(AgentError::TransitionMismatch {
                composed: t.composed_action,
                expected: composed,
            });
        }
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
            self.cursor = (self.cursor + 1) % self.capacity;
        }
        Ok(())
    }

    /// Uniform sample with replacement; `None` while the buffer holds
    /// fewer than `batch_size` items (caller skips the update).
    pub fn sample_refs(
        &self,
        batch_size: usize,
        rng: &mut ChaCha20Rng,
    ) -> Option<Vec<&Transition>> {
        if self.items.len() < batch_size || batch_size == 0 {
            return None;
        }
        Some(
            (0..batch_size)
                .map(|_| &self.items[rng.gen_range(0..self.items.len())])
                .collect(),
        )
    }

    /// Samples and packs into batch arrays ready for network updates.
    pub fn sample_batch(&self, batch_size: usize, rng: &mut ChaCha20Rng) -> Option<SampledBatch> {
        let refs = self.sample_refs(batch_size, rng)?;
        Some(SampledBatch::from_transitions(&refs, self.plan.levels()))
    }
}

/// Column layout of one sampled batch. `digits[level][k]` is sample `k`'s
/// primitive action at that level.
#[derive(Debug, Clone)]
pub struct SampledBatch {
    pub states: Array2<f64>,
    pub next_states: Array2<f64>,
    pub rewards: Vec<f64>,
    pub terminal: Vec<bool>,
    pub digits: Vec<Vec<usize>>,
    pub composed: Vec<usize>,
}

impl SampledBatch {
    pub fn from_transitions(items: &[&Transition], levels: usize) -> Self {
        let batch = items.len();
        let width = items.first().map_or(0, |t| t.state.len());
        let mut states = Array2::zeros((batch, width));
        let mut next_states = Array2::zeros((batch, width));
        let mut rewards = Vec::with_capacity(batch);
        let mut terminal = Vec::with_capacity(batch);
        let mut digits = vec![Vec::with_capacity(batch); levels];
        let mut composed = Vec::with_capacity(batch);
        for (k, t) in items.iter().enumerate() {
            states.row_mut(k).assign(&ndarray::ArrayView1::from(&t.state[..]));
            next_states
                .row_mut(k)
                .assign(&ndarray::ArrayView1::from(&t.next_state[..]));
            rewards.push(t.reward);
            terminal.push(t.terminal);
            for (level, slot) in digits.iter_mut().enumerate() {
                slot.push(t.primitive_actions.digits()[level]);
            }
            composed.push(t.composed_action);
        }
        Self {
            states,
            next_states,
            rewards,
            terminal,
            digits,
            composed,
        }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}
