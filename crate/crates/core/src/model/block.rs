//! Decoder block: multi-head self-attention, output projection, optional
//! residual + layer norm, point-wise feedforward.

use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::kernel::{
    feedforward_backward, feedforward_cached, layer_norm_backward, layer_norm_rows, matmul,
    matmul_atb, CausalMask, DropoutPlan, FeedforwardCache, LayerNormCache, Matrix,
};
use crate::scalar::Scalar;

use super::attention::{head_backward, head_forward, HeadCache};
use super::config::ModelConfig;
use super::params::BlockParams;

pub(super) const LN_EPS: f64 = 1e-5;

pub struct BlockCache<T> {
    /// Block input.
    pub x: Matrix<T>,
    pub heads: Vec<HeadCache<T>>,
    /// Concatenated head outputs (dropout already applied inside heads).
    pub u: Matrix<T>,
    pub ln1: Option<LayerNormCache<T>>,
    /// Feedforward input (post layer norm, or the raw projection output).
    pub n1: Matrix<T>,
    pub ff: FeedforwardCache<T>,
    pub ff_drop: Option<DropoutPlan>,
    pub ln2: Option<LayerNormCache<T>>,
    /// Whether the attention sublayer residual was applicable (widths
    /// match only after the first block).
    pub attn_residual: bool,
}

pub(super) fn block_forward<T: Scalar>(
    x: &Matrix<T>,
    bp: &BlockParams<T>,
    cfg: &ModelConfig,
    mask: Option<&CausalMask>,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<(Matrix<T>, BlockCache<T>)> {
    let t = x.rows();
    let width = cfg.width();
    let mut u = Matrix::zeros(t, width);
    let mut head_caches = Vec::with_capacity(bp.heads.len());
    for (h, hp) in bp.heads.iter().enumerate() {
        let (o, hc) = head_forward(x, hp, mask, cfg.dropout, rng.as_deref_mut())?;
        for i in 0..t {
            u.row_mut(i)[h * cfg.d_v..(h + 1) * cfg.d_v].copy_from_slice(o.row(i));
        }
        head_caches.push(hc);
    }
    let mut a = matmul(&u, &bp.proj_w)?;
    for i in 0..t {
        for (av, &b) in a.row_mut(i).iter_mut().zip(bp.proj_b.row(0)) {
            *av += b;
        }
    }
    let attn_residual = cfg.use_residual_layernorm && x.cols() == width;
    if attn_residual {
        a.axpy(T::one(), x)?;
    }
    let (n1, ln1_cache) = match &bp.ln1 {
        Some(ln) => {
            let (out, cache) = layer_norm_rows(&a, ln.gain.row(0), ln.bias.row(0), T::of(LN_EPS));
            (out, Some(cache))
        }
        None => (a, None),
    };
    let (mut f, ff_cache) =
        feedforward_cached(&n1, &bp.ff_w1, bp.ff_b1.row(0), &bp.ff_w2, bp.ff_b2.row(0))?;
    let ff_drop = match rng {
        Some(rng) if cfg.dropout > 0.0 => {
            let plan = DropoutPlan::new(cfg.dropout, rng);
            plan.apply(&mut f);
            Some(plan)
        }
        _ => None,
    };
    let out = match &bp.ln2 {
        Some(ln) => {
            let mut r2 = f.clone();
            r2.axpy(T::one(), &n1)?;
            let (out, cache) = layer_norm_rows(&r2, ln.gain.row(0), ln.bias.row(0), T::of(LN_EPS));
            return Ok((
                out,
                BlockCache {
                    x: x.clone(),
                    heads: head_caches,
                    u,
                    ln1: ln1_cache,
                    n1,
                    ff: ff_cache,
                    ff_drop,
                    ln2: Some(cache),
                    attn_residual,
                },
            ));
        }
        None => f,
    };
    Ok((
        out,
        BlockCache {
            x: x.clone(),
            heads: head_caches,
            u,
            ln1: ln1_cache,
            n1,
            ff: ff_cache,
            ff_drop,
            ln2: None,
            attn_residual,
        },
    ))
}

/// Backward through one block; returns `dX` and accumulates parameter
/// gradients into `grads`.
pub(super) fn block_backward<T: Scalar>(
    bp: &BlockParams<T>,
    grads: &mut BlockParams<T>,
    cache: &BlockCache<T>,
    cfg: &ModelConfig,
    d_out: &Matrix<T>,
) -> Result<Matrix<T>> {
    let t = cache.x.rows();
    // Through ln2 / residual: r2 = f_dropped + n1.
    let (mut d_f, mut d_n1) = match (&bp.ln2, &cache.ln2) {
        (Some(ln), Some(lnc)) => {
            let g2 = grads.ln2.as_mut().expect("grads mirror params");
            let mut dgain = vec![T::zero(); ln.gain.cols()];
            let mut dbias = vec![T::zero(); ln.bias.cols()];
            let d_r2 = layer_norm_backward(lnc, ln.gain.row(0), d_out, &mut dgain, &mut dbias);
            for (g, &v) in g2.gain.row_mut(0).iter_mut().zip(&dgain) {
                *g += v;
            }
            for (g, &v) in g2.bias.row_mut(0).iter_mut().zip(&dbias) {
                *g += v;
            }
            (d_r2.clone(), d_r2)
        }
        _ => (d_out.clone(), Matrix::zeros(t, cfg.width())),
    };
    if let Some(plan) = &cache.ff_drop {
        plan.apply(&mut d_f);
    }
    let mut db1 = vec![T::zero(); bp.ff_b1.cols()];
    let mut db2 = vec![T::zero(); bp.ff_b2.cols()];
    let d_from_ff = feedforward_backward(
        &cache.n1,
        &bp.ff_w1,
        &bp.ff_w2,
        &cache.ff,
        &d_f,
        &mut grads.ff_w1,
        &mut db1,
        &mut grads.ff_w2,
        &mut db2,
    )?;
    for (g, &v) in grads.ff_b1.row_mut(0).iter_mut().zip(&db1) {
        *g += v;
    }
    for (g, &v) in grads.ff_b2.row_mut(0).iter_mut().zip(&db2) {
        *g += v;
    }
    d_n1.axpy(T::one(), &d_from_ff)?;

    // Through ln1 back to the projection output.
    let d_a = match (&bp.ln1, &cache.ln1) {
        (Some(ln), Some(lnc)) => {
            let g1 = grads.ln1.as_mut().expect("grads mirror params");
            let mut dgain = vec![T::zero(); ln.gain.cols()];
            let mut dbias = vec![T::zero(); ln.bias.cols()];
            let d = layer_norm_backward(lnc, ln.gain.row(0), &d_n1, &mut dgain, &mut dbias);
            for (g, &v) in g1.gain.row_mut(0).iter_mut().zip(&dgain) {
                *g += v;
            }
            for (g, &v) in g1.bias.row_mut(0).iter_mut().zip(&dbias) {
                *g += v;
            }
            d
        }
        _ => d_n1,
    };

    let mut dx = Matrix::zeros(t, cache.x.cols());
    if cache.attn_residual {
        dx.axpy(T::one(), &d_a)?;
    }
    // Projection: a = u·W + b.
    grads.proj_w.axpy(T::one(), &matmul_atb(&cache.u, &d_a)?)?;
    for i in 0..t {
        for (g, &v) in grads.proj_b.row_mut(0).iter_mut().zip(d_a.row(i)) {
            *g += v;
        }
    }
    let d_u = matmul(&d_a, &bp.proj_w.transpose())?;
    // Split per head and run head backward.
    let masked = cfg.use_causal_mask;
    for (h, (hp, hc)) in bp.heads.iter().zip(&cache.heads).enumerate() {
        let mut d_o = Matrix::zeros(t, cfg.d_v);
        for i in 0..t {
            d_o.row_mut(i)
                .copy_from_slice(&d_u.row(i)[h * cfg.d_v..(h + 1) * cfg.d_v]);
        }
        head_backward(
            &cache.x,
            hp,
            hc,
            masked,
            &d_o,
            &mut dx,
            &mut grads.heads[h],
        )?;
    }
    Ok(dx)
}

/// Public single-block forward in evaluation mode (no dropout).
pub fn decoder_block<T: Scalar>(
    y: &Matrix<T>,
    bp: &BlockParams<T>,
    cfg: &ModelConfig,
    mask: Option<&CausalMask>,
) -> Result<Matrix<T>> {
    let (out, _) = block_forward(y, bp, cfg, mask, None)?;
    Ok(out)
}
