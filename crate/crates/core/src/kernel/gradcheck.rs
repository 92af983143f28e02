//! Finite-difference gradient checking.

use crate::scalar::Scalar;

/// `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)`.
pub fn relative_error<T: Scalar>(analytic: T, numeric: T) -> T {
    let denom = analytic.abs().max(numeric.abs()).max(T::of(1e-8));
    (analytic - numeric).abs() / denom
}

/// Central-difference gradient of a scalar-valued function.
pub fn central_difference<T: Scalar>(f: impl Fn(&[T]) -> T, x: &[T], eps: T) -> Vec<T> {
    let mut probe = x.to_vec();
    let two = T::of(2.0);
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + eps;
            let plus = f(&probe);
            probe[i] = orig - eps;
            let minus = f(&probe);
            probe[i] = orig;
            (plus - minus) / (two * eps)
        })
        .collect()
}

/// Max relative error between `analytic_grad` and the central-difference
/// gradient of `f` at `x`.
pub fn grad_check<T: Scalar>(
    f: impl Fn(&[T]) -> T,
    analytic_grad: &[T],
    x: &[T],
    eps: T,
) -> T {
    let numeric = central_difference(f, x, eps);
    analytic_grad
        .iter()
        .zip(&numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .fold(T::zero(), |acc, e| acc.max(e))
}
