//! Incremental autoregressive decoding with cached keys/values.
//!
//! `DecodeState::push` appends one time step and reproduces the batch
//! forward pass bit-for-bit (same accumulation orders), so rollouts and
//! teacher-forced evaluation agree exactly. A frozen prefix is shared
//! between sample trajectories via `fork`.

use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::kernel::Matrix;
use crate::scalar::Scalar;

use super::block::LN_EPS;
use super::config::ModelConfig;
use super::net::{softplus, SIGMA_FLOOR};
use super::params::{LayerNormParams, ModelParams};

#[derive(Clone, Default)]
struct HeadRows<T> {
    /// Keys stored one column per component (`d_k` vectors of length
    /// `rows`) so score accumulation streams along the time axis.
    k_cols: Vec<Vec<T>>,
    /// Values stay row-major (`rows x d_v`).
    v: Vec<T>,
    rows: usize,
}

#[derive(Clone, Default)]
struct BlockRows<T> {
    heads: Vec<HeadRows<T>>,
}

struct BlockState<T> {
    prefix: Option<Arc<BlockRows<T>>>,
    suffix: BlockRows<T>,
}

/// Growing key/value cache for one decoding run.
pub struct DecodeState<T> {
    blocks: Vec<BlockState<T>>,
    len: usize,
}

/// `out[j] += sum_k row[k] * w[k][j]` with the same accumulation order as
/// the batch matmul.
fn row_matmul<T: Scalar>(row: &[T], w: &Matrix<T>, out: &mut [T]) {
    debug_assert_eq!(row.len(), w.rows());
    debug_assert_eq!(out.len(), w.cols());
    out.iter_mut().for_each(|o| *o = T::zero());
    for (k, &a) in row.iter().enumerate() {
        for (o, &b) in out.iter_mut().zip(w.row(k)) {
            *o += a * b;
        }
    }
}

fn ln_row<T: Scalar>(x: &[T], ln: &LayerNormParams<T>) -> Vec<T> {
    let n = T::of(x.len() as f64);
    let mut mean = T::zero();
    for &v in x {
        mean += v;
    }
    mean /= n;
    let mut var = T::zero();
    for &v in x {
        let d = v - mean;
        var += d * d;
    }
    var /= n;
    let inv = T::one() / (var + T::of(LN_EPS)).sqrt();
    let gain = ln.gain.row(0);
    let bias = ln.bias.row(0);
    x.iter()
        .enumerate()
        .map(|(j, &v)| gain[j] * ((v - mean) * inv) + bias[j])
        .collect()
}

impl<T: Scalar> DecodeState<T> {
    pub fn new(cfg: &ModelConfig) -> Self {
        DecodeState {
            blocks: (0..cfg.blocks)
                .map(|_| BlockState {
                    prefix: None,
                    suffix: BlockRows {
                        heads: vec![
                            HeadRows {
                                k_cols: vec![Vec::new(); cfg.d_k],
                                v: Vec::new(),
                                rows: 0,
                            };
                            cfg.heads
                        ],
                    },
                })
                .collect(),
            len: 0,
        }
    }

    /// Steps decoded so far.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Moves the current rows into a shared immutable prefix.
    pub fn freeze(&mut self) {
        for block in &mut self.blocks {
            let rows = std::mem::take(&mut block.suffix);
            let empty = |template: &BlockRows<T>| BlockRows {
                heads: template
                    .heads
                    .iter()
                    .map(|h| HeadRows {
                        k_cols: vec![Vec::new(); h.k_cols.len()],
                        v: Vec::new(),
                        rows: 0,
                    })
                    .collect(),
            };
            if let Some(prefix) = block.prefix.take() {
                // merge previous prefix in front of the new rows
                let mut merged = (*prefix).clone();
                let mut rows = rows;
                for (m, s) in merged.heads.iter_mut().zip(rows.heads.drain(..)) {
                    for (mc, sc) in m.k_cols.iter_mut().zip(s.k_cols) {
                        mc.extend(sc);
                    }
                    m.v.extend(s.v);
                    m.rows += s.rows;
                }
                block.suffix = empty(&merged);
                block.prefix = Some(Arc::new(merged));
            } else {
                block.suffix = empty(&rows);
                block.prefix = Some(Arc::new(rows));
            }
        }
    }

    /// Cheap copy sharing the frozen prefix; per-fork rows stay private.
    pub fn fork(&self) -> Self {
        DecodeState {
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockState {
                    prefix: b.prefix.clone(),
                    suffix: b.suffix.clone(),
                })
                .collect(),
            len: self.len,
        }
    }

    /// Appends one step (`features = [z_{t-1}; x_t]`, scaled space) and
    /// returns the Gaussian head output for it.
    pub fn push(
        &mut self,
        params: &ModelParams<T>,
        cfg: &ModelConfig,
        features: &[T],
        instance: usize,
    ) -> Result<(T, T)> {
        if !cfg.use_causal_mask {
            return Err(CoreError::InvalidConfig(
                "incremental decoding requires the causal mask".into(),
            ));
        }
        let emb = params.embed_instance(instance)?;
        if features.len() + emb.len() != cfg.input_dim() {
            return Err(CoreError::Shape {
                op: "decode_push",
                expected: format!("{} features", cfg.input_dim() - emb.len()),
                got: format!("{}", features.len()),
            });
        }
        let mut y: Vec<T> = features.iter().chain(emb.iter()).copied().collect();
        let width = cfg.width();
        let scale = T::one() / T::of(cfg.d_k as f64).sqrt();
        for (bp, bs) in params.blocks.iter().zip(&mut self.blocks) {
            let mut u = vec![T::zero(); width];
            for (h, hp) in bp.heads.iter().enumerate() {
                let mut q = vec![T::zero(); cfg.d_k];
                let mut k = vec![T::zero(); cfg.d_k];
                let mut v = vec![T::zero(); cfg.d_v];
                row_matmul(&y, &hp.wq, &mut q);
                row_matmul(&y, &hp.wk, &mut k);
                row_matmul(&y, &hp.wv, &mut v);
                let rows = &mut bs.suffix.heads[h];
                for (col, &kd) in rows.k_cols.iter_mut().zip(&k) {
                    col.push(kd);
                }
                rows.v.extend_from_slice(&v);
                rows.rows += 1;

                let prefix = bs.prefix.as_deref();
                let (phead, prows) = match prefix {
                    Some(p) => (Some(&p.heads[h]), p.heads[h].rows),
                    None => (None, 0),
                };
                let rows_ref = &bs.suffix.heads[h];
                let total = prows + rows_ref.rows;
                // scores accumulated component-by-component along the time
                // axis; per-logit addition order stays ascending in d, the
                // same as the batch path
                let mut logits = vec![T::zero(); total];
                for (d, &qd) in q.iter().enumerate() {
                    if let Some(p) = phead {
                        for (l, &kv) in logits[..prows].iter_mut().zip(&p.k_cols[d]) {
                            *l += qd * kv;
                        }
                    }
                    for (l, &kv) in logits[prows..].iter_mut().zip(&rows_ref.k_cols[d]) {
                        *l += qd * kv;
                    }
                }
                for l in logits.iter_mut() {
                    *l *= scale;
                }
                let mut max = logits[0];
                for &l in &logits[1..] {
                    if l > max {
                        max = l;
                    }
                }
                let mut sum = T::zero();
                for l in logits.iter_mut() {
                    let e = (*l - max).exp();
                    *l = e;
                    sum += e;
                }
                let inv = T::one() / sum;
                let out = &mut u[h * cfg.d_v..(h + 1) * cfg.d_v];
                for (j, p) in logits.iter().enumerate() {
                    let p = *p * inv;
                    let vrow = if j < prows {
                        let pvals = &phead.expect("prefix rows exist").v;
                        &pvals[j * cfg.d_v..(j + 1) * cfg.d_v]
                    } else {
                        let jj = j - prows;
                        &rows_ref.v[jj * cfg.d_v..(jj + 1) * cfg.d_v]
                    };
                    for (o, &vv) in out.iter_mut().zip(vrow) {
                        *o += p * vv;
                    }
                }
            }
            let mut a = vec![T::zero(); width];
            row_matmul(&u, &bp.proj_w, &mut a);
            for (av, &b) in a.iter_mut().zip(bp.proj_b.row(0)) {
                *av += b;
            }
            if cfg.use_residual_layernorm && y.len() == width {
                for (av, &xv) in a.iter_mut().zip(&y) {
                    *av += xv;
                }
            }
            let n1 = match &bp.ln1 {
                Some(ln) => ln_row(&a, ln),
                None => a,
            };
            let mut hidden = vec![T::zero(); cfg.ff_dim];
            row_matmul(&n1, &bp.ff_w1, &mut hidden);
            for (hv, &b) in hidden.iter_mut().zip(bp.ff_b1.row(0)) {
                *hv += b;
            }
            for hv in hidden.iter_mut() {
                if *hv <= T::zero() {
                    *hv = T::zero();
                }
            }
            let mut f = vec![T::zero(); width];
            row_matmul(&hidden, &bp.ff_w2, &mut f);
            for (fv, &b) in f.iter_mut().zip(bp.ff_b2.row(0)) {
                *fv += b;
            }
            y = match &bp.ln2 {
                Some(ln) => {
                    let r2: Vec<T> = f.iter().zip(&n1).map(|(&a, &b)| a + b).collect();
                    ln_row(&r2, ln)
                }
                None => f,
            };
            if y.iter().any(|v| !v.is_finite()) {
                return Err(CoreError::NonFinite {
                    layer: "decode block".into(),
                });
            }
        }
        let mut raw = vec![T::zero(); 2];
        row_matmul(&y, &params.head_w, &mut raw);
        for (r, &b) in raw.iter_mut().zip(params.head_b.row(0)) {
            *r += b;
        }
        self.len += 1;
        Ok((raw[0], softplus(raw[1]) + T::of(SIGMA_FLOOR)))
    }
}
