//! Full-network forward and backward over one window.

use rand_chacha::ChaCha8Rng;

use crate::data::WindowData;
use crate::error::{CoreError, Result};
use crate::kernel::{matmul, matmul_abt, matmul_atb, CausalMask, Matrix};
use crate::scalar::Scalar;

use super::block::{block_backward, block_forward, BlockCache};
use super::config::ModelConfig;
use super::params::ModelParams;

pub(super) const SIGMA_FLOOR: f64 = 1e-6;

pub enum ForwardMode<'a> {
    Eval,
    Train { rng: &'a mut ChaCha8Rng },
}

/// Per-step Gaussian parameters over the scaled targets.
#[derive(Clone, Debug)]
pub struct ModelOutput<T> {
    pub mu: Vec<T>,
    pub sigma: Vec<T>,
}

pub struct NetCache<T> {
    pub y0: Matrix<T>,
    pub blocks: Vec<BlockCache<T>>,
    pub y_final: Matrix<T>,
    /// Raw head outputs `(mu, sigma_raw)` before the softplus.
    pub raw: Matrix<T>,
}

pub(super) fn softplus<T: Scalar>(x: T) -> T {
    // max(x, 0) + ln(1 + exp(-|x|)) is stable at both tails
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Assembles `y_t = [z_{t-1}; x_t; e_i]` rows for a window.
fn assemble_input<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    window: &WindowData<T>,
) -> Result<Matrix<T>> {
    let t = window.rows();
    let emb = params.embed_instance(window.instance)?;
    if window.inputs.cols() + cfg.embed_dim != cfg.input_dim() {
        return Err(CoreError::Shape {
            op: "assemble_input",
            expected: format!("window rows of width {}", cfg.input_dim() - cfg.embed_dim),
            got: format!("{}", window.inputs.cols()),
        });
    }
    let mut y = Matrix::zeros(t, cfg.input_dim());
    let base = window.inputs.cols();
    for i in 0..t {
        let row = y.row_mut(i);
        row[..base].copy_from_slice(window.inputs.row(i));
        row[base..].copy_from_slice(emb);
    }
    Ok(y)
}

/// Forward pass over every window position (context and horizon alike).
/// `sigma` is `softplus(raw) + 1e-6`, always positive.
pub fn forward<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    window: &WindowData<T>,
    mode: ForwardMode<'_>,
) -> Result<(ModelOutput<T>, Option<NetCache<T>>)> {
    let t = window.rows();
    let mask_store;
    let mask = if cfg.use_causal_mask {
        mask_store = CausalMask::new(t);
        Some(&mask_store)
    } else {
        None
    };
    let y0 = assemble_input(params, cfg, window)?;
    let (mut rng_opt, keep_cache) = match mode {
        ForwardMode::Eval => (None, false),
        ForwardMode::Train { rng } => (Some(rng), true),
    };
    let mut caches = Vec::with_capacity(cfg.blocks);
    let mut y = y0.clone();
    for (bi, bp) in params.blocks.iter().enumerate() {
        let (next, cache) = block_forward(&y, bp, cfg, mask, rng_opt.as_deref_mut())?;
        if !next.all_finite() {
            return Err(CoreError::NonFinite {
                layer: format!("decoder block {bi}"),
            });
        }
        y = next;
        if keep_cache {
            caches.push(cache);
        }
    }
    let mut raw = matmul(&y, &params.head_w)?;
    for i in 0..t {
        for (r, &b) in raw.row_mut(i).iter_mut().zip(params.head_b.row(0)) {
            *r += b;
        }
    }
    if !raw.all_finite() {
        return Err(CoreError::NonFinite {
            layer: "gaussian head".into(),
        });
    }
    let mut mu = Vec::with_capacity(t);
    let mut sigma = Vec::with_capacity(t);
    let floor = T::of(SIGMA_FLOOR);
    for i in 0..t {
        mu.push(raw[(i, 0)]);
        sigma.push(softplus(raw[(i, 1)]) + floor);
    }
    let cache = keep_cache.then(|| NetCache {
        y0,
        blocks: caches,
        y_final: y,
        raw,
    });
    Ok((ModelOutput { mu, sigma }, cache))
}

/// Evaluation-mode forward (deterministic, no dropout, no cache).
pub fn forward_eval<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    window: &WindowData<T>,
) -> Result<ModelOutput<T>> {
    forward(params, cfg, window, ForwardMode::Eval).map(|(o, _)| o)
}

/// Backward from per-step gradients on `(mu, sigma)`.
///
/// Accumulates all parameter gradients (including the embedding row of the
/// window's instance) into `grads` and returns the gradient with respect
/// to the raw window inputs (`t x (1 + D)`).
pub fn backward<T: Scalar>(
    params: &ModelParams<T>,
    cfg: &ModelConfig,
    window: &WindowData<T>,
    cache: &NetCache<T>,
    d_mu: &[T],
    d_sigma: &[T],
    grads: &mut ModelParams<T>,
) -> Result<Matrix<T>> {
    let t = window.rows();
    let mut d_raw = Matrix::zeros(t, 2);
    for i in 0..t {
        d_raw[(i, 0)] = d_mu[i];
        // sigma = softplus(raw) + floor
        d_raw[(i, 1)] = d_sigma[i] * sigmoid(cache.raw[(i, 1)]);
    }
    grads
        .head_w
        .axpy(T::one(), &matmul_atb(&cache.y_final, &d_raw)?)?;
    for i in 0..t {
        for (g, &v) in grads.head_b.row_mut(0).iter_mut().zip(d_raw.row(i)) {
            *g += v;
        }
    }
    let mut d_y = matmul_abt(&d_raw, &params.head_w)?;
    for (bi, (bp, bc)) in params
        .blocks
        .iter()
        .zip(&cache.blocks)
        .enumerate()
        .rev()
    {
        d_y = block_backward(bp, &mut grads.blocks[bi], bc, cfg, &d_y)?;
    }
    // Split input gradient: window features vs embedding row.
    let base = window.inputs.cols();
    let mut d_inputs = Matrix::zeros(t, base);
    for i in 0..t {
        d_inputs.row_mut(i).copy_from_slice(&d_y.row(i)[..base]);
        let emb_row = grads.embedding.row_mut(window.instance);
        for (g, &v) in emb_row.iter_mut().zip(&d_y.row(i)[base..]) {
            *g += v;
        }
    }
    Ok(d_inputs)
}
