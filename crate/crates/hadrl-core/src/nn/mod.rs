//! Dense dueling Q-network machinery: forward pass, squared-TD-error
//! gradients restricted to taken actions, optimizer steps, target-network
//! synchronization, checkpointing, and finite-difference verification.
//!
//! Everything is 64-bit floating point. The topology is fixed: a shared
//! ReLU trunk feeding a linear advantage head of width `actions` and a
//! linear value head of width 1 (optionally through one extra ReLU layer),
//! aggregated as `q = v + a - mean(a)`.

mod check;
mod checkpoint;
mod optimizer;

pub use check::{finite_diff_check, max_relative_error, numeric_gradients, single_loss};
pub use checkpoint::{load_network, save_network, CheckpointError, MAGIC};
pub use optimizer::{optimizer_step, OptimizerMode, OptimizerState};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NnError {
    #[error("architecture needs at least an input width")]
    EmptyArchitecture,
    #[error("layer widths and action counts must be >= 1")]
    ZeroWidth,
    #[error("input has {got} entries, network expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("batch is empty")]
    EmptyBatch,
    #[error("states, actions and targets disagree on batch size")]
    BatchShapeMismatch,
    #[error("action {action} outside head width {actions}")]
    ActionOutOfRange { action: usize, actions: usize },
    #[error("parameter shapes do not match")]
    ShapeMismatch,
    #[error("non-finite gradient, update rejected")]
    NonFiniteGradient,
}

/// Layer widths of the dueling network. `layers` holds the input width
/// followed by the shared trunk widths; `value_hidden` optionally inserts
/// one extra ReLU layer on the value path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub layers: Vec<usize>,
    pub value_hidden: Option<usize>,
    pub actions: usize,
}

impl Architecture {
    pub fn new(layers: Vec<usize>, actions: usize) -> Self {
        Self {
            layers,
            value_hidden: None,
            actions,
        }
    }

    pub fn with_value_hidden(mut self, width: usize) -> Self {
        self.value_hidden = Some(width);
        self
    }

    /// Desk-scale default: [128, 128] trunk plus a 64-wide value layer.
    pub fn desk(input: usize, actions: usize) -> Self {
        Self {
            layers: vec![input, 128, 128],
            value_hidden: Some(64),
            actions,
        }
    }

    /// Large preset: [2048, 2048] trunk plus a 512-wide value layer.
    pub fn large(input: usize, actions: usize) -> Self {
        Self {
            layers: vec![input, 2048, 2048],
            value_hidden: Some(512),
            actions,
        }
    }

    pub fn input_width(&self) -> usize {
        self.layers[0]
    }

    /// Width of the trunk output feeding both heads.
    pub fn feature_width(&self) -> usize {
        *self.layers.last().unwrap()
    }

    fn validate(&self) -> Result<(), NnError> {
        if self.layers.is_empty() {
            return Err(NnError::EmptyArchitecture);
        }
        if self.layers.iter().any(|&w| w == 0)
            || self.actions == 0
            || self.value_hidden == Some(0)
        {
            return Err(NnError::ZeroWidth);
        }
        Ok(())
    }
}

/// One weight matrix (input-major rows) and its bias vector. Also reused
/// as the per-block container for gradients and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl DenseLayer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            w: Array2::zeros((inputs, outputs)),
            b: Array1::zeros(outputs),
        }
    }

    fn glorot(inputs: usize, outputs: usize, rng: &mut ChaCha20Rng) -> Self {
        let bound = (6.0 / (inputs + outputs) as f64).sqrt();
        let w = Array2::from_shape_fn((inputs, outputs), |_| rng.gen::<f64>() * 2.0 * bound - bound);
        Self {
            w,
            b: Array1::zeros(outputs),
        }
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.w.dim() == other.w.dim() && self.b.len() == other.b.len()
    }
}

/// Parameter-shaped gradient blocks in the network's documented block
/// order (trunk layers, advantage head, value hidden layer if present,
/// value head).
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<DenseLayer>);

impl Gradients {
    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .all(|l| l.w.iter().all(|v| v.is_finite()) && l.b.iter().all(|v| v.is_finite()))
    }
}

/// Dueling Q-value approximator for one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    arch: Architecture,
    trunk: Vec<DenseLayer>,
    advantage: DenseLayer,
    value_hidden: Option<DenseLayer>,
    value: DenseLayer,
}

/// Delayed parameter copy of a [`QNetwork`], updated only by explicit
/// synchronization.
#[derive(Debug, Clone)]
pub struct TargetNetwork(QNetwork);

impl TargetNetwork {
    pub fn of(net: &QNetwork) -> Self {
        Self(net.clone())
    }

    pub fn network(&self) -> &QNetwork {
        &self.0
    }

    pub fn forward(&self, state: &[f64]) -> Result<Vec<f64>, NnError> {
        self.0.forward(state)
    }

    pub fn forward_batch(&self, states: ArrayView2<f64>) -> Result<Array2<f64>, NnError> {
        self.0.forward_batch(states)
    }

    /// Copies every source parameter into the target, bit for bit.
    pub fn sync_from(&mut self, net: &QNetwork) -> Result<(), NnError> {
        if self.0.arch != net.arch {
            return Err(NnError::ShapeMismatch);
        }
        self.0.clone_from(net);
        Ok(())
    }
}

struct ForwardCache {
    input: Array2<f64>,
    trunk_pre: Vec<Array2<f64>>,
    trunk_act: Vec<Array2<f64>>,
    vh_pre: Option<Array2<f64>>,
    vh_act: Option<Array2<f64>>,
    advantage: Array2<f64>,
    q: Array2<f64>,
}

impl QNetwork {
    /// Glorot-uniform weights, zero biases, deterministic for a fixed seed.
    pub fn init(arch: &Architecture, seed: u64) -> Result<Self, NnError> {
        arch.validate()?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut trunk = Vec::with_capacity(arch.layers.len().saturating_sub(1));
        for pair in arch.layers.windows(2) {
            trunk.push(DenseLayer::glorot(pair[0], pair[1], &mut rng));
        }
        let feat = arch.feature_width();
        let advantage = DenseLayer::glorot(feat, arch.actions, &mut rng);
        let (value_hidden, value_in) = match arch.value_hidden {
            Some(h) => (Some(DenseLayer::glorot(feat, h, &mut rng)), h),
            None => (None, feat),
        };
        let value = DenseLayer::glorot(value_in, 1, &mut rng);
        Ok(Self {
            arch: arch.clone(),
            trunk,
            advantage,
            value_hidden,
            value,
        })
    }

    /// All-zero parameters; forward output is identically zero.
    pub fn zeroed(arch: &Architecture) -> Result<Self, NnError> {
        arch.validate()?;
        let mut trunk = Vec::new();
        for pair in arch.layers.windows(2) {
            trunk.push(DenseLayer::zeros(pair[0], pair[1]));
        }
        let feat = arch.feature_width();
        let advantage = DenseLayer::zeros(feat, arch.actions);
        let (value_hidden, value_in) = match arch.value_hidden {
            Some(h) => (Some(DenseLayer::zeros(feat, h)), h),
            None => (None, feat),
        };
        let value = DenseLayer::zeros(value_in, 1);
        Ok(Self {
            arch: arch.clone(),
            trunk,
            advantage,
            value_hidden,
            value,
        })
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn actions(&self) -> usize {
        self.arch.actions
    }

    /// Parameter blocks in documented order: trunk layers front to back,
    /// advantage head, value hidden layer (when present), value head.
    pub fn blocks(&self) -> Vec<&DenseLayer> {
        let mut blocks: Vec<&DenseLayer> = self.trunk.iter().collect();
        blocks.push(&self.advantage);
        if let Some(vh) = &self.value_hidden {
            blocks.push(vh);
        }
        blocks.push(&self.value);
        blocks
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut DenseLayer> {
        let mut blocks: Vec<&mut DenseLayer> = self.trunk.iter_mut().collect();
        blocks.push(&mut self.advantage);
        if let Some(vh) = &mut self.value_hidden {
            blocks.push(vh);
        }
        blocks.push(&mut self.value);
        blocks
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients(
            self.blocks()
                .iter()
                .map(|l| DenseLayer::zeros(l.w.nrows(), l.w.ncols()))
                .collect(),
        )
    }

    pub fn parameter_count(&self) -> usize {
        self.blocks().iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Q-values for one state: `q = v + a - mean(a)`.
    pub fn forward(&self, state: &[f64]) -> Result<Vec<f64>, NnError> {
        if state.len() != self.arch.input_width() {
            return Err(NnError::DimensionMismatch {
                expected: self.arch.input_width(),
                got: state.len(),
            });
        }
        let states = ArrayView2::from_shape((1, state.len()), state).expect("1xN view");
        let q = self.forward_batch(states)?;
        Ok(q.row(0).to_vec())
    }

    pub fn forward_batch(&self, states: ArrayView2<f64>) -> Result<Array2<f64>, NnError> {
        Ok(self.forward_cached(states)?.q)
    }

    /// Post-activation output of the last trunk layer for one state (the
    /// representation both heads read).
    pub fn trunk_features(&self, state: &[f64]) -> Result<Vec<f64>, NnError> {
        if state.len() != self.arch.input_width() {
            return Err(NnError::DimensionMismatch {
                expected: self.arch.input_width(),
                got: state.len(),
            });
        }
        let states = ArrayView2::from_shape((1, state.len()), state).expect("1xN view");
        let cache = self.forward_cached(states)?;
        let feats = cache.trunk_act.last().unwrap_or(&cache.input);
        Ok(feats.row(0).to_vec())
    }

    fn forward_cached(&self, states: ArrayView2<f64>) -> Result<ForwardCache, NnError> {
        if states.ncols() != self.arch.input_width() {
            return Err(NnError::DimensionMismatch {
                expected: self.arch.input_width(),
                got: states.ncols(),
            });
        }
        let input = states.to_owned();
        let mut trunk_pre = Vec::with_capacity(self.trunk.len());
        let mut trunk_act = Vec::with_capacity(self.trunk.len());
        let mut h = input.clone();
        for layer in &self.trunk {
            let pre = h.dot(&layer.w) + &layer.b;
            let act = pre.mapv(|z| z.max(0.0));
            trunk_pre.push(pre);
            trunk_act.push(act.clone());
            h = act;
        }
        let features = &h;

        let advantage = features.dot(&self.advantage.w) + &self.advantage.b;
        let (vh_pre, vh_act, value_in) = match &self.value_hidden {
            Some(vh) => {
                let pre = features.dot(&vh.w) + &vh.b;
                let act = pre.mapv(|z| z.max(0.0));
                (Some(pre), Some(act.clone()), act)
            }
            None => (None, None, features.clone()),
        };
        let value = value_in.dot(&self.value.w) + &self.value.b;

        let adv_mean = advantage
            .mean_axis(Axis(1))
            .expect("actions >= 1")
            .insert_axis(Axis(1));
        let q = &advantage - &adv_mean + &value;

        Ok(ForwardCache {
            input,
            trunk_pre,
            trunk_act,
            vh_pre,
            vh_act,
            advantage,
            q,
        })
    }

    /// Mean squared TD error over the batch, restricted to each sample's
    /// taken action, with gradients for every parameter. Gradients flow
    /// only through the taken-action outputs.
    pub fn td_loss_and_grads(
        &self,
        states: ArrayView2<f64>,
        actions: &[usize],
        targets: &[f64],
    ) -> Result<(f64, Gradients), NnError> {
        let batch = states.nrows();
        if batch == 0 {
            return Err(NnError::EmptyBatch);
        }
        if actions.len() != batch || targets.len() != batch {
            return Err(NnError::BatchShapeMismatch);
        }
        for &a in actions {
            if a >= self.arch.actions {
                return Err(NnError::ActionOutOfRange {
                    action: a,
                    actions: self.arch.actions,
                });
            }
        }

        let cache = self.forward_cached(states)?;
        let n_actions = self.arch.actions as f64;
        let scale = 2.0 / batch as f64;

        let mut loss = 0.0;
        let mut d_adv = Array2::<f64>::zeros(cache.advantage.raw_dim());
        let mut d_val = Array2::<f64>::zeros((batch, 1));
        for k in 0..batch {
            let err = cache.q[[k, actions[k]]] - targets[k];
            loss += err * err;
            let g = scale * err;
            // q[k, j] = v[k] + a[k, j] - mean_m a[k, m]
            for j in 0..self.arch.actions {
                d_adv[[k, j]] = -g / n_actions;
            }
            d_adv[[k, actions[k]]] += g;
            d_val[[k, 0]] = g;
        }
        loss /= batch as f64;

        let features = cache.trunk_act.last().unwrap_or(&cache.input);

        // Advantage head.
        let g_adv = DenseLayer {
            w: features.t().dot(&d_adv),
            b: d_adv.sum_axis(Axis(0)),
        };
        let mut d_features = d_adv.dot(&self.advantage.w.t());

        // Value path.
        let (g_vh, g_val) = match (&self.value_hidden, &cache.vh_pre, &cache.vh_act) {
            (Some(vh), Some(pre), Some(act)) => {
                let g_val = DenseLayer {
                    w: act.t().dot(&d_val),
                    b: d_val.sum_axis(Axis(0)),
                };
                let d_act = d_val.dot(&self.value.w.t());
                let d_pre = &d_act * &pre.mapv(|z| if z > 0.0 { 1.0 } else { 0.0 });
                let g_vh = DenseLayer {
                    w: features.t().dot(&d_pre),
                    b: d_pre.sum_axis(Axis(0)),
                };
                d_features = d_features + d_pre.dot(&vh.w.t());
                (Some(g_vh), g_val)
            }
            _ => {
                let g_val = DenseLayer {
                    w: features.t().dot(&d_val),
                    b: d_val.sum_axis(Axis(0)),
                };
                d_features = d_features + d_val.dot(&self.value.w.t());
                (None, g_val)
            }
        };

        // Trunk, back to front.
        let mut trunk_grads: Vec<DenseLayer> = Vec::with_capacity(self.trunk.len());
        let mut d_h = d_features;
        for (i, layer) in self.trunk.iter().enumerate().rev() {
            let d_pre = &d_h * &cache.trunk_pre[i].mapv(|z| if z > 0.0 { 1.0 } else { 0.0 });
            let below: &Array2<f64> = if i == 0 {
                &cache.input
            } else {
                &cache.trunk_act[i - 1]
            };
            trunk_grads.push(DenseLayer {
                w: below.t().dot(&d_pre),
                b: d_pre.sum_axis(Axis(0)),
            });
            d_h = d_pre.dot(&layer.w.t());
        }
        trunk_grads.reverse();

        let mut blocks = trunk_grads;
        blocks.push(g_adv);
        if let Some(g) = g_vh {
            blocks.push(g);
        }
        blocks.push(g_val);

        Ok((loss, Gradients(blocks)))
    }
}
