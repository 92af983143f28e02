//! Scaled dot-product attention heads with hand-written backward passes.

use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::kernel::{
    attn_value_mix_canonical, masked_softmax, masked_softmax_backward, matmul, matmul_abt,
    matmul_atb, softmax_rows_backward, softmax_rows_canonical, CausalMask, DropoutPlan, Matrix,
};
use crate::scalar::Scalar;

use super::params::HeadParams;

/// Forward intermediates one head needs for its backward pass.
pub struct HeadCache<T> {
    pub q: Matrix<T>,
    pub k: Matrix<T>,
    pub v: Matrix<T>,
    /// Post-softmax attention probabilities (pre-dropout).
    pub p: Matrix<T>,
    /// Dropout decisions over the probabilities, when training.
    pub drop: Option<DropoutPlan>,
}

/// Scaled dot products `Q·Kᵀ/sqrt(d_k)` computed only at allowed
/// positions; blocked entries are never read downstream and stay zero.
/// Iterates the transposed key matrix so the inner loop runs along the
/// long time axis.
fn masked_scores<T: Scalar>(q: &Matrix<T>, k: &Matrix<T>, scale: T) -> Matrix<T> {
    let t = q.rows();
    let kt = k.transpose();
    let mut out = Matrix::zeros(t, t);
    for i in 0..t {
        let qrow = q.row(i);
        let orow = &mut out.row_mut(i)[..=i];
        for (d, &qd) in qrow.iter().enumerate() {
            let krow = &kt.row(d)[..=i];
            for (o, &kv) in orow.iter_mut().zip(krow) {
                *o += qd * kv;
            }
        }
        for o in orow.iter_mut() {
            *o *= scale;
        }
    }
    out
}

/// `P·V` where row `i` of `P` is supported on positions `j <= i`; future
/// rows of `V` are never touched. `plan` folds dropout into the
/// coefficients without materializing a mask.
fn masked_value_mix<T: Scalar>(
    p: &Matrix<T>,
    plan: Option<&DropoutPlan>,
    v: &Matrix<T>,
) -> Matrix<T> {
    let t = p.rows();
    let cols = v.cols();
    let mut out = Matrix::zeros(t, cols);
    for i in 0..t {
        let prow = p.row(i);
        let orow = &mut out.row_mut(i)[..];
        for (j, &pij) in prow.iter().enumerate().take(i + 1) {
            let pij = match plan {
                Some(plan) => pij * plan.factor(i * t + j),
                None => pij,
            };
            if pij == T::zero() {
                continue;
            }
            let vrow = v.row(j);
            for (o, &vv) in orow.iter_mut().zip(vrow) {
                *o += pij * vv;
            }
        }
    }
    out
}

pub(super) fn head_forward<T: Scalar>(
    y: &Matrix<T>,
    hp: &HeadParams<T>,
    mask: Option<&CausalMask>,
    dropout: f64,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<(Matrix<T>, HeadCache<T>)> {
    let q = matmul(y, &hp.wq)?;
    let k = matmul(y, &hp.wk)?;
    let v = matmul(y, &hp.wv)?;
    let scale = T::one() / T::of(hp.wq.cols() as f64).sqrt();
    let p = match mask {
        Some(m) => {
            let logits = masked_scores(&q, &k, scale);
            masked_softmax(&logits, m)?
        }
        None => {
            // Maskless path: canonical reductions keep the output exactly
            // equivariant under row permutations.
            let mut logits = matmul_abt(&q, &k)?;
            logits.scale(scale);
            softmax_rows_canonical(&logits)
        }
    };
    let drop = match rng {
        Some(rng) if dropout > 0.0 => Some(DropoutPlan::new(dropout, rng)),
        _ => None,
    };
    let o = match mask {
        Some(_) => masked_value_mix(&p, drop.as_ref(), &v),
        None => {
            let p_eff = match &drop {
                Some(plan) => {
                    let mut pe = p.clone();
                    plan.apply(&mut pe);
                    pe
                }
                None => p.clone(),
            };
            attn_value_mix_canonical(&p_eff, &v)?
        }
    };
    Ok((o, HeadCache { q, k, v, p, drop }))
}

/// `dO · Vᵀ` restricted to allowed (lower-triangular) entries; iterates
/// the transposed values so the inner loop runs along the time axis.
fn masked_mix_backward<T: Scalar>(d_out: &Matrix<T>, v: &Matrix<T>) -> Matrix<T> {
    let t = d_out.rows();
    let vt = v.transpose();
    let mut dp = Matrix::zeros(t, t);
    for i in 0..t {
        let drow = d_out.row(i);
        let orow = &mut dp.row_mut(i)[..=i];
        for (d, &dv) in drow.iter().enumerate() {
            let vrow = &vt.row(d)[..=i];
            for (o, &vv) in orow.iter_mut().zip(vrow) {
                *o += dv * vv;
            }
        }
    }
    dp
}

/// `Aᵀ · B` where row `i` of `A` is supported on columns `j <= i`, with
/// optional dropout factors folded into the coefficients.
fn masked_atb<T: Scalar>(a: &Matrix<T>, plan: Option<&DropoutPlan>, b: &Matrix<T>) -> Matrix<T> {
    let t = a.rows();
    let cols = b.cols();
    let mut out = Matrix::zeros(a.cols(), cols);
    for i in 0..t {
        let arow = a.row(i);
        let brow = b.row(i);
        for (j, &aij) in arow.iter().enumerate().take(i + 1) {
            let aij = match plan {
                Some(plan) => aij * plan.factor(i * t + j),
                None => aij,
            };
            if aij == T::zero() {
                continue;
            }
            let orow = out.row_mut(j);
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += aij * bv;
            }
        }
    }
    out
}

/// Backward through one head. Accumulates `dY` into `dy` and parameter
/// gradients into `dhp`.
pub(super) fn head_backward<T: Scalar>(
    y: &Matrix<T>,
    hp: &HeadParams<T>,
    cache: &HeadCache<T>,
    masked: bool,
    d_out: &Matrix<T>,
    dy: &mut Matrix<T>,
    dhp: &mut HeadParams<T>,
) -> Result<()> {
    // dV = P_effᵀ · dO ; dP_eff = dO · Vᵀ
    let (dv, mut dp) = if masked {
        (
            masked_atb(&cache.p, cache.drop.as_ref(), d_out),
            masked_mix_backward(d_out, &cache.v),
        )
    } else {
        let p_eff = match &cache.drop {
            Some(plan) => {
                let mut pe = cache.p.clone();
                plan.apply(&mut pe);
                pe
            }
            None => cache.p.clone(),
        };
        (matmul_atb(&p_eff, d_out)?, matmul_abt(d_out, &cache.v)?)
    };
    if let Some(plan) = &cache.drop {
        plan.apply(&mut dp);
    }
    let dlogits = if masked {
        masked_softmax_backward(&cache.p, &dp)
    } else {
        softmax_rows_backward(&cache.p, &dp)
    };
    let scale = T::one() / T::of(hp.wq.cols() as f64).sqrt();
    // logits = scale * (Q·Kᵀ); dS rows share the lower-triangular support
    let mut ds = dlogits;
    ds.scale(scale);
    let (dq, dk) = if masked {
        (
            masked_value_mix(&ds, None, &cache.k),
            masked_atb(&ds, None, &cache.q),
        )
    } else {
        (matmul(&ds, &cache.k)?, matmul_atb(&ds, &cache.q)?)
    };
    // transposed weights turn the row-by-row dots into vectorized
    // row accumulations
    dy.axpy(T::one(), &matmul(&dq, &hp.wq.transpose())?)?;
    dy.axpy(T::one(), &matmul(&dk, &hp.wk.transpose())?)?;
    dy.axpy(T::one(), &matmul(&dv, &hp.wv.transpose())?)?;
    dhp.wq.axpy(T::one(), &matmul_atb(y, &dq)?)?;
    dhp.wk.axpy(T::one(), &matmul_atb(y, &dk)?)?;
    dhp.wv.axpy(T::one(), &matmul_atb(y, &dv)?)?;
    Ok(())
}

/// One attention head: `masked_softmax(Q·Kᵀ/sqrt(d_k)) · V` with
/// `Q = Y·Wq`, `K = Y·Wk`, `V = Y·Wv`. Evaluation mode (no dropout).
pub fn attention_head<T: Scalar>(
    y: &Matrix<T>,
    wq: &Matrix<T>,
    wk: &Matrix<T>,
    wv: &Matrix<T>,
    mask: Option<&CausalMask>,
) -> Result<Matrix<T>> {
    let hp = HeadParams {
        wq: wq.clone(),
        wk: wk.clone(),
        wv: wv.clone(),
    };
    let (o, _) = head_forward(y, &hp, mask, 0.0, None)?;
    Ok(o)
}
