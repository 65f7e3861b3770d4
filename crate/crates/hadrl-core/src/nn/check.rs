//! Finite-difference verification of the analytic gradients.

use ndarray::ArrayView2;

use super::{Gradients, NnError, QNetwork};

/// Squared TD error of a single (state, action, target) sample.
pub fn single_loss(net: &QNetwork, state: &[f64], action: usize, target: f64) -> Result<f64, NnError> {
    let q = net.forward(state)?;
    if action >= q.len() {
        return Err(NnError::ActionOutOfRange {
            action,
            actions: q.len(),
        });
    }
    let err = q[action] - target;
    Ok(err * err)
}

/// Central finite differences `(L(p+eps) - L(p-eps)) / 2eps` for every
/// parameter, on a scratch copy of the network.
pub fn numeric_gradients(
    net: &QNetwork,
    state: &[f64],
    action: usize,
    target: f64,
    epsilon: f64,
) -> Result<Gradients, NnError> {
    let mut scratch = net.clone();
    let mut grads = net.zero_gradients();
    let blocks = scratch.blocks_mut().len();
    for block in 0..blocks {
        let weights = scratch.blocks_mut()[block].w.len();
        for idx in 0..weights {
            let original = scratch.blocks_mut()[block].w.as_slice().unwrap()[idx];
            set_w(&mut scratch, block, idx, original + epsilon);
            let plus = single_loss(&scratch, state, action, target)?;
            set_w(&mut scratch, block, idx, original - epsilon);
            let minus = single_loss(&scratch, state, action, target)?;
            set_w(&mut scratch, block, idx, original);
            grads.0[block].w.as_slice_mut().unwrap()[idx] = (plus - minus) / (2.0 * epsilon);
        }
        let biases = scratch.blocks_mut()[block].b.len();
        for idx in 0..biases {
            let original = scratch.blocks_mut()[block].b[idx];
            scratch.blocks_mut()[block].b[idx] = original + epsilon;
            let plus = single_loss(&scratch, state, action, target)?;
            scratch.blocks_mut()[block].b[idx] = original - epsilon;
            let minus = single_loss(&scratch, state, action, target)?;
            scratch.blocks_mut()[block].b[idx] = original;
            grads.0[block].b[idx] = (plus - minus) / (2.0 * epsilon);
        }
    }
    Ok(grads)
}

fn set_w(net: &mut QNetwork, block: usize, idx: usize, value: f64) {
    net.blocks_mut()[block].w.as_slice_mut().unwrap()[idx] = value;
}

/// Worst per-entry relative deviation between two gradient sets.
/// Entries where both sides are below 1e-12 in magnitude count as zero.
pub fn max_relative_error(a: &Gradients, b: &Gradients) -> f64 {
    let mut worst = 0.0f64;
    for (la, lb) in a.0.iter().zip(&b.0) {
        for (&x, &y) in la.w.iter().zip(lb.w.iter()).chain(la.b.iter().zip(lb.b.iter())) {
            let denom = x.abs().max(y.abs());
            if denom < 1e-12 {
                continue;
            }
            worst = worst.max((x - y).abs() / denom);
        }
    }
    worst
}

/// Compares analytic gradients against central finite differences on one
/// sample and returns the maximum relative error.
pub fn finite_diff_check(
    net: &QNetwork,
    state: &[f64],
    action: usize,
    target: f64,
    epsilon: f64,
) -> Result<f64, NnError> {
    let states = ArrayView2::from_shape((1, state.len()), state).expect("1xN view");
    let (_, analytic) = net.td_loss_and_grads(states, &[action], &[target])?;
    let numeric = numeric_gradients(net, state, action, target, epsilon)?;
    Ok(max_relative_error(&analytic, &numeric))
}
