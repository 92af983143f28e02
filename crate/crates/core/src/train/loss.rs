//! Gaussian negative log-likelihood over selected window steps.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

/// Which window steps contribute to the objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossScope {
    /// Loss accumulated over the forecast horizon only (default).
    HorizonOnly,
    AllSteps,
}

impl Default for LossScope {
    fn default() -> Self {
        LossScope::HorizonOnly
    }
}

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// Mean Gaussian NLL over the steps selected by `scope_mask`.
pub fn nll_loss<T: Scalar>(mu: &[T], sigma: &[T], targets: &[T], scope_mask: &[bool]) -> Result<T> {
    if mu.len() != sigma.len() || mu.len() != targets.len() || mu.len() != scope_mask.len() {
        return Err(CoreError::Shape {
            op: "nll_loss",
            expected: format!("equal lengths ({})", mu.len()),
            got: format!("{}/{}/{}", sigma.len(), targets.len(), scope_mask.len()),
        });
    }
    let mut acc = T::zero();
    let mut n = 0usize;
    for i in 0..mu.len() {
        if !scope_mask[i] {
            continue;
        }
        if sigma[i] <= T::zero() {
            return Err(CoreError::InvalidInput(format!(
                "non-positive sigma at step {i}"
            )));
        }
        let z = (targets[i] - mu[i]) / sigma[i];
        acc += T::of(HALF_LN_2PI) + sigma[i].ln() + T::of(0.5) * z * z;
        n += 1;
    }
    if n == 0 {
        return Err(CoreError::InvalidInput("empty loss scope".into()));
    }
    Ok(acc / T::of(n as f64))
}

/// Gradients of the mean NLL with respect to `mu` and `sigma`.
pub fn nll_loss_backward<T: Scalar>(
    mu: &[T],
    sigma: &[T],
    targets: &[T],
    scope_mask: &[bool],
) -> (Vec<T>, Vec<T>) {
    let n = T::of(scope_mask.iter().filter(|&&m| m).count().max(1) as f64);
    let mut d_mu = vec![T::zero(); mu.len()];
    let mut d_sigma = vec![T::zero(); mu.len()];
    for i in 0..mu.len() {
        if !scope_mask[i] {
            continue;
        }
        let diff = targets[i] - mu[i];
        let s = sigma[i];
        d_mu[i] = -diff / (s * s) / n;
        d_sigma[i] = (T::one() / s - diff * diff / (s * s * s)) / n;
    }
    (d_mu, d_sigma)
}

/// Scope mask for a window of `rows` steps whose horizon occupies
/// `horizon_rows`.
pub fn scope_mask(rows: usize, horizon_rows: std::ops::Range<usize>, scope: LossScope) -> Vec<bool> {
    match scope {
        LossScope::AllSteps => vec![true; rows],
        LossScope::HorizonOnly => {
            let mut m = vec![false; rows];
            for i in horizon_rows {
                m[i] = true;
            }
            m
        }
    }
}
