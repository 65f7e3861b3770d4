//! Parameter updates: adaptive-moment estimation by default, plain
//! gradient descent for tests that need exact arithmetic.

use super::{DenseLayer, Gradients, NnError, QNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerMode {
    /// Adaptive moments, decay rates 0.9 / 0.999, epsilon 1e-8.
    Adam,
    /// `p -= lr * g`.
    Sgd,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// First and second moment accumulators, shaped like the network.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    mode: OptimizerMode,
    step: u64,
    m: Vec<DenseLayer>,
    v: Vec<DenseLayer>,
}

impl OptimizerState {
    pub fn new(mode: OptimizerMode, net: &QNetwork) -> Self {
        let zeros = net.zero_gradients().0;
        Self {
            mode,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn mode(&self) -> OptimizerMode {
        self.mode
    }

    pub fn steps(&self) -> u64 {
        self.step
    }
}

/// Applies `grads` to `net` in place. Non-finite gradients reject the
/// whole update and leave parameters and optimizer state untouched.
pub fn optimizer_step(
    net: &mut QNetwork,
    grads: &Gradients,
    state: &mut OptimizerState,
    lr: f64,
) -> Result<(), NnError> {
    {
        let blocks = net.blocks();
        if blocks.len() != grads.0.len()
            || blocks
                .iter()
                .zip(&grads.0)
                .any(|(p, g)| !p.same_shape(g))
        {
            return Err(NnError::ShapeMismatch);
        }
    }
    if !grads.is_finite() {
        return Err(NnError::NonFiniteGradient);
    }

    match state.mode {
        OptimizerMode::Sgd => {
            for (param, grad) in net.blocks_mut().into_iter().zip(&grads.0) {
                param.w.scaled_add(-lr, &grad.w);
                param.b.scaled_add(-lr, &grad.b);
            }
        }
        OptimizerMode::Adam => {
            state.step += 1;
            let t = state.step as i32;
            let bias1 = 1.0 - BETA1.powi(t);
            let bias2 = 1.0 - BETA2.powi(t);
            for (((param, grad), m), v) in net
                .blocks_mut()
                .into_iter()
                .zip(&grads.0)
                .zip(&mut state.m)
                .zip(&mut state.v)
            {
                m.w.zip_mut_with(&grad.w, |m, &g| *m = BETA1 * *m + (1.0 - BETA1) * g);
                m.b.zip_mut_with(&grad.b, |m, &g| *m = BETA1 * *m + (1.0 - BETA1) * g);
                v.w.zip_mut_with(&grad.w, |v, &g| *v = BETA2 * *v + (1.0 - BETA2) * g * g);
                v.b.zip_mut_with(&grad.b, |v, &g| *v = BETA2 * *v + (1.0 - BETA2) * g * g);
                ndarray::Zip::from(&mut param.w)
                    .and(&m.w)
                    .and(&v.w)
                    .for_each(|p, &m, &v| *p -= lr * (m / bias1) / ((v / bias2).sqrt() + EPS));
                ndarray::Zip::from(&mut param.b)
                    .and(&m.b)
                    .and(&v.b)
                    .for_each(|p, &m, &v| *p -= lr * (m / bias1) / ((v / bias2).sqrt() + EPS));
            }
        }
    }
    debug_assert!(net
        .blocks()
        .iter()
        .all(|l| l.w.iter().all(|x| x.is_finite()) && l.b.iter().all(|x| x.is_finite())));
    Ok(())
}
