//! Adam over the model's tensor list with global-norm gradient clipping.

use crate::error::Result;
use crate::kernel::{adam_step, AdamHyper, AdamState};
use crate::model::ModelParams;
use crate::scalar::Scalar;

pub struct ModelOptimizer<T> {
    states: Vec<AdamState<T>>,
    hyper: AdamHyper<T>,
    grad_clip: Option<T>,
}

impl<T: Scalar> ModelOptimizer<T> {
    pub fn new(params: &ModelParams<T>, hyper: AdamHyper<T>, grad_clip: Option<T>) -> Self {
        let states = params
            .tensors()
            .into_iter()
            .map(|(_, m)| AdamState::new(m.data().len()))
            .collect();
        ModelOptimizer {
            states,
            hyper,
            grad_clip,
        }
    }

    /// Applies one update; `grads` must mirror `params`' tensor layout.
    pub fn step(&mut self, params: &mut ModelParams<T>, grads: &ModelParams<T>) -> Result<()> {
        let scale = match self.grad_clip {
            Some(limit) => {
                let mut sq = T::zero();
                for (_, g) in grads.tensors() {
                    sq += g.sum_of_squares();
                }
                let norm = sq.sqrt();
                if norm > limit {
                    limit / norm
                } else {
                    T::one()
                }
            }
            None => T::one(),
        };
        let gts = grads.tensors();
        for (((_, p), (_, g)), st) in params
            .tensors_mut()
            .into_iter()
            .zip(gts)
            .zip(&mut self.states)
        {
            if scale != T::one() {
                let scaled: Vec<T> = g.data().iter().map(|&v| v * scale).collect();
                adam_step(p.data_mut(), &scaled, st, &self.hyper)?;
            } else {
                adam_step(p.data_mut(), g.data(), st, &self.hyper)?;
            }
        }
        Ok(())
    }
}
