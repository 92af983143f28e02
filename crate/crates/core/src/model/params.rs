//! Learnable parameter tensors and their iteration order.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::kernel::Matrix;
use crate::scalar::Scalar;

use super::config::ModelConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct HeadParams<T> {
    pub wq: Matrix<T>,
    pub wk: Matrix<T>,
    pub wv: Matrix<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerNormParams<T> {
    /// `1 x width`
    pub gain: Matrix<T>,
    pub bias: Matrix<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockParams<T> {
    pub heads: Vec<HeadParams<T>>,
    pub proj_w: Matrix<T>,
    pub proj_b: Matrix<T>,
    pub ln1: Option<LayerNormParams<T>>,
    pub ff_w1: Matrix<T>,
    pub ff_b1: Matrix<T>,
    pub ff_w2: Matrix<T>,
    pub ff_b2: Matrix<T>,
    pub ln2: Option<LayerNormParams<T>>,
}

/// All learnable weights: per-block attention heads, projections and
/// feedforward layers, the instance embedding table, and the Gaussian
/// head mapping final features to `(mu, sigma_raw)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    pub blocks: Vec<BlockParams<T>>,
    /// `k x E` instance embedding table.
    pub embedding: Matrix<T>,
    /// `width x 2`
    pub head_w: Matrix<T>,
    /// `1 x 2`
    pub head_b: Matrix<T>,
}

fn xavier<T: Scalar>(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix<T> {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    let mut m = Matrix::zeros(rows, cols);
    for v in m.data_mut() {
        *v = T::of((rng.random::<f64>() * 2.0 - 1.0) * a);
    }
    m
}

impl<T: Scalar> ModelParams<T> {
    /// Uniform(-a, a) init with `a = sqrt(6/(fan_in+fan_out))` for weight
    /// matrices; zeros for biases and embeddings; layer-norm gain one.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = crate::rng::stream(seed, "init", 0);
        let w = cfg.width();
        let ln = |_rng: &mut ChaCha8Rng| LayerNormParams {
            gain: {
                let mut g = Matrix::zeros(1, w);
                g.fill(T::one());
                g
            },
            bias: Matrix::zeros(1, w),
        };
        let blocks = (0..cfg.blocks)
            .map(|b| {
                let w_in = cfg.block_input_dim(b);
                BlockParams {
                    heads: (0..cfg.heads)
                        .map(|_| HeadParams {
                            wq: xavier(w_in, cfg.d_k, &mut rng),
                            wk: xavier(w_in, cfg.d_k, &mut rng),
                            wv: xavier(w_in, cfg.d_v, &mut rng),
                        })
                        .collect(),
                    proj_w: xavier(w, w, &mut rng),
                    proj_b: Matrix::zeros(1, w),
                    ln1: cfg.use_residual_layernorm.then(|| ln(&mut rng)),
                    ff_w1: xavier(w, cfg.ff_dim, &mut rng),
                    ff_b1: Matrix::zeros(1, cfg.ff_dim),
                    ff_w2: xavier(cfg.ff_dim, w, &mut rng),
                    ff_b2: Matrix::zeros(1, w),
                    ln2: cfg.use_residual_layernorm.then(|| ln(&mut rng)),
                }
            })
            .collect();
        Ok(ModelParams {
            blocks,
            embedding: Matrix::zeros(cfg.num_instances, cfg.embed_dim),
            head_w: xavier(w, 2, &mut rng),
            head_b: Matrix::zeros(1, 2),
        })
    }

    /// Same shapes, all zeros; used as gradient storage.
    pub fn zeros_like(&self) -> Self {
        let zero = |m: &Matrix<T>| Matrix::zeros(m.rows(), m.cols());
        ModelParams {
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockParams {
                    heads: b
                        .heads
                        .iter()
                        .map(|h| HeadParams {
                            wq: zero(&h.wq),
                            wk: zero(&h.wk),
                            wv: zero(&h.wv),
                        })
                        .collect(),
                    proj_w: zero(&b.proj_w),
                    proj_b: zero(&b.proj_b),
                    ln1: b.ln1.as_ref().map(|l| LayerNormParams {
                        gain: zero(&l.gain),
                        bias: zero(&l.bias),
                    }),
                    ff_w1: zero(&b.ff_w1),
                    ff_b1: zero(&b.ff_b1),
                    ff_w2: zero(&b.ff_w2),
                    ff_b2: zero(&b.ff_b2),
                    ln2: b.ln2.as_ref().map(|l| LayerNormParams {
                        gain: zero(&l.gain),
                        bias: zero(&l.bias),
                    }),
                })
                .collect(),
            embedding: zero(&self.embedding),
            head_w: zero(&self.head_w),
            head_b: zero(&self.head_b),
        }
    }

    /// Row `i` of the embedding table.
    pub fn embed_instance(&self, i: usize) -> Result<&[T]> {
        if i >= self.embedding.rows() {
            return Err(CoreError::IndexOutOfRange {
                what: "instance embedding".into(),
                index: i,
                len: self.embedding.rows(),
            });
        }
        Ok(self.embedding.row(i))
    }

    /// Named tensors in a fixed order (the same order `tensors_mut`
    /// yields, which optimizer state relies on).
    pub fn tensors(&self) -> Vec<(String, &Matrix<T>)> {
        let mut out = Vec::new();
        for (bi, b) in self.blocks.iter().enumerate() {
            for (hi, h) in b.heads.iter().enumerate() {
                out.push((format!("block{bi}.head{hi}.wq"), &h.wq));
                out.push((format!("block{bi}.head{hi}.wk"), &h.wk));
                out.push((format!("block{bi}.head{hi}.wv"), &h.wv));
            }
            out.push((format!("block{bi}.proj_w"), &b.proj_w));
            out.push((format!("block{bi}.proj_b"), &b.proj_b));
            if let Some(ln) = &b.ln1 {
                out.push((format!("block{bi}.ln1.gain"), &ln.gain));
                out.push((format!("block{bi}.ln1.bias"), &ln.bias));
            }
            out.push((format!("block{bi}.ff_w1"), &b.ff_w1));
            out.push((format!("block{bi}.ff_b1"), &b.ff_b1));
            out.push((format!("block{bi}.ff_w2"), &b.ff_w2));
            out.push((format!("block{bi}.ff_b2"), &b.ff_b2));
            if let Some(ln) = &b.ln2 {
                out.push((format!("block{bi}.ln2.gain"), &ln.gain));
                out.push((format!("block{bi}.ln2.bias"), &ln.bias));
            }
        }
        out.push(("embedding".into(), &self.embedding));
        out.push(("head_w".into(), &self.head_w));
        out.push(("head_b".into(), &self.head_b));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut Matrix<T>)> {
        let mut out: Vec<(String, &mut Matrix<T>)> = Vec::new();
        for (bi, b) in self.blocks.iter_mut().enumerate() {
            for (hi, h) in b.heads.iter_mut().enumerate() {
                out.push((format!("block{bi}.head{hi}.wq"), &mut h.wq));
                out.push((format!("block{bi}.head{hi}.wk"), &mut h.wk));
                out.push((format!("block{bi}.head{hi}.wv"), &mut h.wv));
            }
            out.push((format!("block{bi}.proj_w"), &mut b.proj_w));
            out.push((format!("block{bi}.proj_b"), &mut b.proj_b));
            if let Some(ln) = &mut b.ln1 {
                out.push((format!("block{bi}.ln1.gain"), &mut ln.gain));
                out.push((format!("block{bi}.ln1.bias"), &mut ln.bias));
            }
            out.push((format!("block{bi}.ff_w1"), &mut b.ff_w1));
            out.push((format!("block{bi}.ff_b1"), &mut b.ff_b1));
            out.push((format!("block{bi}.ff_w2"), &mut b.ff_w2));
            out.push((format!("block{bi}.ff_b2"), &mut b.ff_b2));
            if let Some(ln) = &mut b.ln2 {
                out.push((format!("block{bi}.ln2.gain"), &mut ln.gain));
                out.push((format!("block{bi}.ln2.bias"), &mut ln.bias));
            }
        }
        out.push(("embedding".into(), &mut self.embedding));
        out.push(("head_w".into(), &mut self.head_w));
        out.push(("head_b".into(), &mut self.head_b));
        out
    }

    /// Total learnable scalars.
    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|(_, m)| m.data().len()).sum()
    }

    /// `self += alpha * other`, tensor by tensor.
    pub fn axpy(&mut self, alpha: T, other: &ModelParams<T>) -> Result<()> {
        let others = other.tensors();
        for ((_, dst), (_, src)) in self.tensors_mut().into_iter().zip(others) {
            dst.axpy(alpha, src)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: T) {
        for (_, t) in self.tensors_mut() {
            t.scale(s);
        }
    }
}
