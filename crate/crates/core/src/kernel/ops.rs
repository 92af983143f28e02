//! Softmax, feedforward, layer norm and dropout kernels with their
//! backward passes.

use rand::Rng;

use crate::error::{CoreError, Result};
use crate::scalar::{canonical_sum, Scalar};

use super::mask::CausalMask;
use super::matrix::Matrix;

/// Row-wise softmax restricted to the positions the causal mask allows.
///
/// Blocked positions come out exactly zero; each row sums to one over the
/// allowed positions. Realizes the additive -inf masking semantics: the
/// current time step never sees future positions.
pub fn masked_softmax<T: Scalar>(logits: &Matrix<T>, mask: &CausalMask) -> Result<Matrix<T>> {
    let (rows, cols) = logits.shape();
    if cols != mask.size() || rows > cols {
        return Err(CoreError::Shape {
            op: "masked_softmax",
            expected: format!("logits t x {} with t <= {}", mask.size(), mask.size()),
            got: format!("{rows}x{cols}"),
        });
    }
    let mut out = Matrix::zeros(rows, cols);
    for i in 0..rows {
        let allowed = mask.allowed_in_row(i).min(cols);
        if allowed == 0 {
            return Err(CoreError::EmptySoftmaxRow { row: i });
        }
        let lrow = &logits.row(i)[..allowed];
        let mut max = lrow[0];
        for &v in &lrow[1..] {
            if v > max {
                max = v;
            }
        }
        let orow = out.row_mut(i);
        let mut sum = T::zero();
        for j in 0..allowed {
            let e = (lrow[j] - max).exp();
            orow[j] = e;
            sum += e;
        }
        let inv = T::one() / sum;
        for o in orow[..allowed].iter_mut() {
            *o *= inv;
        }
    }
    Ok(out)
}

/// Backward of [`masked_softmax`]: `dL = P ⊙ (dP − rowdot(dP, P))`.
/// Blocked entries of `p` are zero, so their gradient vanishes with them.
pub fn masked_softmax_backward<T: Scalar>(p: &Matrix<T>, dp: &Matrix<T>) -> Matrix<T> {
    debug_assert_eq!(p.shape(), dp.shape());
    let (rows, cols) = p.shape();
    let mut out = Matrix::zeros(rows, cols);
    for i in 0..rows {
        let prow = p.row(i);
        let dprow = dp.row(i);
        let mut inner = T::zero();
        for (&pv, &dv) in prow.iter().zip(dprow) {
            inner += pv * dv;
        }
        let orow = out.row_mut(i);
        for j in 0..cols {
            orow[j] = prow[j] * (dprow[j] - inner);
        }
    }
    out
}

/// Plain row-wise softmax over all positions (maskless attention path).
pub fn softmax_rows<T: Scalar>(logits: &Matrix<T>) -> Matrix<T> {
    softmax_rows_impl(logits, false)
}

/// Row-wise softmax whose normalizer is accumulated in value-sorted order,
/// making the result bitwise stable under permutations of the positions.
pub fn softmax_rows_canonical<T: Scalar>(logits: &Matrix<T>) -> Matrix<T> {
    softmax_rows_impl(logits, true)
}

fn softmax_rows_impl<T: Scalar>(logits: &Matrix<T>, canonical: bool) -> Matrix<T> {
    let (rows, cols) = logits.shape();
    let mut out = Matrix::zeros(rows, cols);
    let mut scratch = vec![T::zero(); cols];
    for i in 0..rows {
        let lrow = logits.row(i);
        let mut max = lrow[0];
        for &v in &lrow[1..] {
            if v > max {
                max = v;
            }
        }
        let orow = out.row_mut(i);
        for (o, &l) in orow.iter_mut().zip(lrow) {
            *o = (l - max).exp();
        }
        let sum = if canonical {
            scratch.copy_from_slice(orow);
            canonical_sum(&mut scratch)
        } else {
            let mut s = T::zero();
            for &e in orow.iter() {
                s += e;
            }
            s
        };
        let inv = T::one() / sum;
        for o in orow.iter_mut() {
            *o *= inv;
        }
    }
    out
}

/// Backward of the maskless softmax (same Jacobian as the masked one).
pub fn softmax_rows_backward<T: Scalar>(p: &Matrix<T>, dp: &Matrix<T>) -> Matrix<T> {
    masked_softmax_backward(p, dp)
}

/// `P · V` with each output coordinate accumulated in value-sorted order;
/// pairs with [`softmax_rows_canonical`] on the maskless path.
pub fn attn_value_mix_canonical<T: Scalar>(p: &Matrix<T>, v: &Matrix<T>) -> Result<Matrix<T>> {
    if p.cols() != v.rows() {
        return Err(CoreError::DimMismatch {
            op: "attn_value_mix_canonical",
            lhs_rows: p.rows(),
            lhs_cols: p.cols(),
            rhs_rows: v.rows(),
            rhs_cols: v.cols(),
        });
    }
    let mut out = Matrix::zeros(p.rows(), v.cols());
    let mut terms = vec![T::zero(); p.cols()];
    for i in 0..p.rows() {
        let prow = p.row(i);
        for d in 0..v.cols() {
            for (j, t) in terms.iter_mut().enumerate() {
                *t = prow[j] * v[(j, d)];
            }
            out[(i, d)] = canonical_sum(&mut terms);
        }
    }
    Ok(out)
}

/// Two point-wise dense layers with a ReLU in the middle:
/// `relu(Y·W1 + b1)·W2 + b2`, applied independently per time step.
pub fn feedforward<T: Scalar>(
    y: &Matrix<T>,
    w1: &Matrix<T>,
    b1: &[T],
    w2: &Matrix<T>,
    b2: &[T],
) -> Result<Matrix<T>> {
    let (out, _) = feedforward_cached(y, w1, b1, w2, b2)?;
    Ok(out)
}

/// Intermediates needed by [`feedforward_backward`].
pub struct FeedforwardCache<T> {
    /// Pre-activation of the hidden layer (`Y·W1 + b1`).
    pub hidden_pre: Matrix<T>,
}

pub fn feedforward_cached<T: Scalar>(
    y: &Matrix<T>,
    w1: &Matrix<T>,
    b1: &[T],
    w2: &Matrix<T>,
    b2: &[T],
) -> Result<(Matrix<T>, FeedforwardCache<T>)> {
    if b1.len() != w1.cols() || b2.len() != w2.cols() {
        return Err(CoreError::Shape {
            op: "feedforward",
            expected: format!("b1 len {}, b2 len {}", w1.cols(), w2.cols()),
            got: format!("b1 len {}, b2 len {}", b1.len(), b2.len()),
        });
    }
    let mut hidden_pre = super::matrix::matmul(y, w1)?;
    for i in 0..hidden_pre.rows() {
        for (h, &b) in hidden_pre.row_mut(i).iter_mut().zip(b1) {
            *h += b;
        }
    }
    let hidden = hidden_pre.map(|v| if v > T::zero() { v } else { T::zero() });
    let mut out = super::matrix::matmul(&hidden, w2)?;
    for i in 0..out.rows() {
        for (o, &b) in out.row_mut(i).iter_mut().zip(b2) {
            *o += b;
        }
    }
    Ok((out, FeedforwardCache { hidden_pre }))
}

/// Gradients of the feedforward op. Returns `dY` and accumulates parameter
/// gradients into the provided buffers.
#[allow(clippy::too_many_arguments)]
pub fn feedforward_backward<T: Scalar>(
    y: &Matrix<T>,
    w1: &Matrix<T>,
    w2: &Matrix<T>,
    cache: &FeedforwardCache<T>,
    d_out: &Matrix<T>,
    dw1: &mut Matrix<T>,
    db1: &mut [T],
    dw2: &mut Matrix<T>,
    db2: &mut [T],
) -> Result<Matrix<T>> {
    let hidden = cache
        .hidden_pre
        .map(|v| if v > T::zero() { v } else { T::zero() });
    dw2.axpy(T::one(), &super::matrix::matmul_atb(&hidden, d_out)?)?;
    for i in 0..d_out.rows() {
        for (db, &d) in db2.iter_mut().zip(d_out.row(i)) {
            *db += d;
        }
    }
    let mut d_hidden = super::matrix::matmul(d_out, &w2.transpose())?;
    for (dh, &pre) in d_hidden.data_mut().iter_mut().zip(cache.hidden_pre.data()) {
        if pre <= T::zero() {
            *dh = T::zero();
        }
    }
    dw1.axpy(T::one(), &super::matrix::matmul_atb(y, &d_hidden)?)?;
    for i in 0..d_hidden.rows() {
        for (db, &d) in db1.iter_mut().zip(d_hidden.row(i)) {
            *db += d;
        }
    }
    super::matrix::matmul(&d_hidden, &w1.transpose())
}

/// Per-row statistics cached by [`layer_norm_rows`].
pub struct LayerNormCache<T> {
    pub xhat: Matrix<T>,
    pub inv_std: Vec<T>,
}

/// `gain ⊙ (x − mean)/sqrt(var + eps) + bias` over a single vector.
pub fn layer_norm<T: Scalar>(x: &[T], gain: &[T], bias: &[T], eps: T) -> Vec<T> {
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
    let inv = T::one() / (var + eps).sqrt();
    x.iter()
        .zip(gain.iter().zip(bias))
        .map(|(&v, (&g, &b))| g * (v - mean) * inv + b)
        .collect()
}

/// Layer norm applied independently to every row, returning the cache the
/// backward pass needs.
pub fn layer_norm_rows<T: Scalar>(
    x: &Matrix<T>,
    gain: &[T],
    bias: &[T],
    eps: T,
) -> (Matrix<T>, LayerNormCache<T>) {
    let (rows, cols) = x.shape();
    debug_assert_eq!(gain.len(), cols);
    let n = T::of(cols as f64);
    let mut out = Matrix::zeros(rows, cols);
    let mut xhat = Matrix::zeros(rows, cols);
    let mut inv_std = vec![T::zero(); rows];
    for i in 0..rows {
        let xrow = x.row(i);
        let mut mean = T::zero();
        for &v in xrow {
            mean += v;
        }
        mean /= n;
        let mut var = T::zero();
        for &v in xrow {
            let d = v - mean;
            var += d * d;
        }
        var /= n;
        let inv = T::one() / (var + eps).sqrt();
        inv_std[i] = inv;
        let hrow = xhat.row_mut(i);
        let orow = out.row_mut(i);
        for j in 0..cols {
            let h = (xrow[j] - mean) * inv;
            hrow[j] = h;
            orow[j] = gain[j] * h + bias[j];
        }
    }
    (out, LayerNormCache { xhat, inv_std })
}

/// Backward of [`layer_norm_rows`]; returns `dX` and accumulates `dgain`
/// and `dbias`.
pub fn layer_norm_backward<T: Scalar>(
    cache: &LayerNormCache<T>,
    gain: &[T],
    d_out: &Matrix<T>,
    dgain: &mut [T],
    dbias: &mut [T],
) -> Matrix<T> {
    let (rows, cols) = cache.xhat.shape();
    let n = T::of(cols as f64);
    let mut dx = Matrix::zeros(rows, cols);
    for i in 0..rows {
        let hrow = cache.xhat.row(i);
        let drow = d_out.row(i);
        let mut sum_dh = T::zero();
        let mut sum_dh_h = T::zero();
        for j in 0..cols {
            dgain[j] += drow[j] * hrow[j];
            dbias[j] += drow[j];
            let dh = drow[j] * gain[j];
            sum_dh += dh;
            sum_dh_h += dh * hrow[j];
        }
        let inv = cache.inv_std[i];
        let mean_dh = sum_dh / n;
        let mean_dh_h = sum_dh_h / n;
        let dxrow = dx.row_mut(i);
        for j in 0..cols {
            let dh = drow[j] * gain[j];
            dxrow[j] = inv * (dh - mean_dh - hrow[j] * mean_dh_h);
        }
    }
    dx
}

/// Inverted dropout as a counter-based plan: one seed drawn up front,
/// entry decisions recomputed on demand (nothing stored per entry).
#[derive(Clone, Copy, Debug)]
pub struct DropoutPlan {
    seed: u64,
    threshold: u64,
    keep_inv: f64,
}

impl DropoutPlan {
    pub fn new(rate: f64, rng: &mut impl Rng) -> Self {
        debug_assert!((0.0..1.0).contains(&rate));
        DropoutPlan {
            seed: rng.random(),
            threshold: (rate * (1u64 << 53) as f64) as u64,
            keep_inv: 1.0 / (1.0 - rate),
        }
    }

    #[inline]
    pub fn kept(&self, index: usize) -> bool {
        let h = splitmix64(self.seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        (h >> 11) >= self.threshold
    }

    /// `0` for dropped entries, `1/(1-rate)` for kept ones.
    #[inline]
    pub fn factor<T: Scalar>(&self, index: usize) -> T {
        if self.kept(index) {
            T::of(self.keep_inv)
        } else {
            T::zero()
        }
    }

    /// Multiplies every entry of a matrix by its dropout factor, in place.
    pub fn apply<T: Scalar>(&self, m: &mut Matrix<T>) {
        let keep = T::of(self.keep_inv);
        for (i, v) in m.data_mut().iter_mut().enumerate() {
            *v = if self.kept(i) { *v * keep } else { T::zero() };
        }
    }
}

/// Materialized inverted-dropout mask: entries are `0` or `1/(1-rate)`.
pub fn dropout_mask<T: Scalar>(rows: usize, cols: usize, rate: f64, rng: &mut impl Rng) -> Matrix<T> {
    let plan = DropoutPlan::new(rate, rng);
    let mut m = Matrix::zeros(rows, cols);
    for (i, v) in m.data_mut().iter_mut().enumerate() {
        *v = plan.factor(i);
    }
    m
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
