//! Scalar abstraction: all numeric code is generic over `f32`/`f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, NumAssign, NumCast};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar the numeric kernels operate on.
pub trait Scalar:
    Float
    + NumAssign
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    fn of(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("finite f64 converts to scalar")
    }

    /// Widens to `f64` for reporting and aggregation.
    fn to_f64(self) -> f64 {
        <f64 as NumCast>::from(self).expect("scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Sum in the order given by sorting values under the IEEE total order.
///
/// Multiset-identical inputs reduce to bitwise-identical sums regardless of
/// the order they arrive in; used by the maskless attention path so that it
/// is exactly equivariant under row permutations.
pub fn canonical_sum<T: Scalar>(values: &mut [T]) -> T {
    values.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in canonical sum"));
    let mut acc = T::zero();
    for &v in values.iter() {
        acc += v;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_sum_is_permutation_invariant() {
        let mut a = vec![0.1f64, 0.7, 1e-9, -0.3, 2.5];
        let mut b = vec![2.5f64, -0.3, 0.7, 1e-9, 0.1];
        assert_eq!(canonical_sum(&mut a).to_bits(), canonical_sum(&mut b).to_bits());
    }

    #[test]
    fn scalar_round_trips_constants() {
        assert_eq!(f64::of(0.25), 0.25);
        assert_eq!(f32::of(0.25), 0.25f32);
        assert_eq!(1.5f64.to_f64(), 1.5);
    }
}
