//! Rolling-window scaling applied before window sampling.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

/// Scale statistic over the trailing window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalerKind {
    /// `1 + mean(|z|)` — the +1 keeps all-zero spans at a neutral scale.
    OnePlusMean,
    /// `mean(|z|)`; exactly equivariant under `z -> c·z` on windows with a
    /// nonzero mean. Falls back to 1 on all-zero spans.
    Mean,
}

impl Default for ScalerKind {
    fn default() -> Self {
        ScalerKind::OnePlusMean
    }
}

/// Scale factor over the `width`-length span ending at `anchor` (clipped
/// to the series start). Window values are divided by the result before
/// they reach the model.
pub fn rolling_scale<T: Scalar>(values: &[T], anchor: usize, width: usize, kind: ScalerKind) -> T {
    debug_assert!(anchor < values.len());
    debug_assert!(width >= 1);
    let lo = anchor.saturating_sub(width - 1);
    let span = &values[lo..=anchor];
    let mut sum = T::zero();
    for &v in span {
        sum += v.abs();
    }
    let mean = sum / T::of(span.len() as f64);
    match kind {
        ScalerKind::OnePlusMean => T::one() + mean,
        ScalerKind::Mean => {
            if mean == T::zero() {
                T::one()
            } else {
                mean
            }
        }
    }
}
