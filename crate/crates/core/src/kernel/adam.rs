//! Adam optimizer step over a flat parameter tensor.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

/// Adam hyperparameters; defaults are lr 1e-3, beta1 0.9, beta2 0.999,
/// eps 1e-8.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AdamHyper<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Scalar> Default for AdamHyper<T> {
    fn default() -> Self {
        AdamHyper {
            lr: T::of(1e-3),
            beta1: T::of(0.9),
            beta2: T::of(0.999),
            eps: T::of(1e-8),
        }
    }
}

impl<T: Scalar> AdamHyper<T> {
    pub fn with_lr(lr: T) -> Self {
        AdamHyper {
            lr,
            ..Self::default()
        }
    }
}

/// First/second moment accumulators plus the step counter for one tensor.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdamState<T> {
    m: Vec<T>,
    v: Vec<T>,
    step: u64,
}

impl<T: Scalar> AdamState<T> {
    /// Zero-initialized state for a tensor of `len` scalars.
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step<T: Scalar>(
    params: &mut [T],
    grads: &[T],
    state: &mut AdamState<T>,
    hp: &AdamHyper<T>,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(CoreError::Shape {
            op: "adam_step",
            expected: format!("params/grads/state of len {}", state.m.len()),
            got: format!("params {}, grads {}", params.len(), grads.len()),
        });
    }
    state.step += 1;
    let t = T::of(state.step as f64);
    let bc1 = T::one() - hp.beta1.powf(t);
    let bc2 = T::one() - hp.beta2.powf(t);
    let one = T::one();
    for ((p, &g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        *m = hp.beta1 * *m + (one - hp.beta1) * g;
        *v = hp.beta2 * *v + (one - hp.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p = *p - hp.lr * m_hat / (v_hat.sqrt() + hp.eps);
    }
    Ok(())
}
