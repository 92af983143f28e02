//! Assembling scaled model inputs from window specs.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{CoreError, Result};
use crate::kernel::Matrix;
use crate::scalar::Scalar;

use super::covariates::CovariateMatrix;
use super::sampler::WindowSpec;
use super::scaling::{rolling_scale, ScalerKind};
use super::series::SeriesSet;

/// One window ready for the model: rows pair the true previous value
/// `z_{t-1}` with the covariates `x_t`, both context and horizon steps.
/// All `z` values are divided by the window's scale factor.
#[derive(Clone, Debug)]
pub struct WindowData<T> {
    pub instance: usize,
    /// `(context + horizon) x (1 + D)`; the instance embedding is appended
    /// by the model.
    pub inputs: Matrix<T>,
    /// Scaled targets `z_t` per row.
    pub targets: Vec<T>,
    /// Scale factor nu; de-scaling multiplies by it.
    pub scale: T,
    pub context_len: usize,
    pub horizon_len: usize,
}

impl<T: Scalar> WindowData<T> {
    pub fn rows(&self) -> usize {
        self.targets.len()
    }

    /// Row positions belonging to the forecast horizon.
    pub fn horizon_rows(&self) -> std::ops::Range<usize> {
        self.context_len..self.context_len + self.horizon_len
    }
}

#[derive(Clone, Debug, Default)]
pub struct Batch<T> {
    pub windows: Vec<WindowData<T>>,
}

/// Builds model inputs for every spec. The scale factor is anchored at the
/// last context-eligible point (the step just before the horizon); the
/// first series step uses `z_0 := 0` for its missing predecessor.
pub fn build_batch<T: Scalar>(
    specs: &[WindowSpec],
    series: &SeriesSet<T>,
    covariates: &[CovariateMatrix<T>],
    scaler: ScalerKind,
    scale_width: usize,
) -> Result<Batch<T>> {
    build_batch_padded(specs, series, covariates, scaler, scale_width, 0)
}

/// [`build_batch`] for series carrying `pad` synthetic leading zeros
/// (vanilla mode). The scale span never counts pad steps: it clips to the
/// real data, and a window whose whole context sits in the pad anchors on
/// the first real step instead so its targets still reach the model at a
/// sane magnitude.
pub fn build_batch_padded<T: Scalar>(
    specs: &[WindowSpec],
    series: &SeriesSet<T>,
    covariates: &[CovariateMatrix<T>],
    scaler: ScalerKind,
    scale_width: usize,
    pad: usize,
) -> Result<Batch<T>> {
    let mut windows = Vec::with_capacity(specs.len());
    for spec in specs {
        if spec.instance >= series.k() {
            return Err(CoreError::IndexOutOfRange {
                what: "window spec instance".into(),
                index: spec.instance,
                len: series.k(),
            });
        }
        let inst = &series.instances[spec.instance];
        let cov = &covariates[spec.instance];
        let values = &inst.values;
        let last = spec.horizon_start + spec.horizon_len - 1;
        if last >= values.len() {
            return Err(CoreError::IndexOutOfRange {
                what: format!(
                    "window spec for instance {} (horizon {}..={})",
                    spec.instance,
                    spec.horizon_start + 1,
                    last + 1
                ),
                index: last,
                len: values.len(),
            });
        }
        if last >= cov.len() {
            return Err(CoreError::IndexOutOfRange {
                what: format!("covariates for instance {}", spec.instance),
                index: last,
                len: cov.len(),
            });
        }
        let anchor = (spec.horizon_start - 1).max(pad).min(values.len() - 1);
        let span_start = anchor + 1 - (anchor + 1 - pad).min(scale_width);
        let nu = rolling_scale(&values[span_start..], anchor - span_start, scale_width, scaler);
        let inv = T::one() / nu;
        let rows = spec.window_len();
        let dim = 1 + cov.dim();
        let mut inputs = Matrix::zeros(rows, dim);
        let mut targets = Vec::with_capacity(rows);
        for (r, t) in spec
            .context
            .iter()
            .copied()
            .chain(spec.horizon_indices())
            .enumerate()
        {
            let prev = if t == 0 { T::zero() } else { values[t - 1] * inv };
            let row = inputs.row_mut(r);
            row[0] = prev;
            row[1..].copy_from_slice(cov.row(t));
            targets.push(values[t] * inv);
        }
        windows.push(WindowData {
            instance: spec.instance,
            inputs,
            targets,
            scale: nu,
            context_len: spec.context_len(),
            horizon_len: spec.horizon_len,
        });
    }
    Ok(Batch { windows })
}

/// Disjoint train/validation partition of the specs.
///
/// The validation share is `round(fraction * n)`, at least 1 and at most
/// `n - 1`; deterministic under the seed.
pub fn validation_split<R: Rng>(
    specs: Vec<WindowSpec>,
    fraction: f64,
    rng: &mut R,
) -> Result<(Vec<WindowSpec>, Vec<WindowSpec>)> {
    if specs.len() < 2 {
        return Err(CoreError::InvalidInput(format!(
            "validation split needs at least 2 specs, got {}",
            specs.len()
        )));
    }
    if !(0.0..1.0).contains(&fraction) || fraction <= 0.0 {
        return Err(CoreError::InvalidConfig(format!(
            "validation fraction {fraction} outside (0, 1)"
        )));
    }
    let n = specs.len();
    let val_n = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let val_idx: std::collections::BTreeSet<usize> = order[..val_n].iter().copied().collect();
    let mut train = Vec::with_capacity(n - val_n);
    let mut val = Vec::with_capacity(val_n);
    for (i, spec) in specs.into_iter().enumerate() {
        if val_idx.contains(&i) {
            val.push(spec);
        } else {
            train.push(spec);
        }
    }
    Ok((train, val))
}

#[cfg(test)]
mod tests {
    use super::super::covariates::make_covariates;
    use super::super::sampler::SamplerMode;
    use super::super::series::SeriesInstance;
    use super::*;
    use chrono::NaiveDate;

    fn toy_series(values: Vec<f64>) -> SeriesSet<f64> {
        SeriesSet {
            instances: vec![SeriesInstance {
                id: "a".into(),
                start: NaiveDate::from_ymd_opt(2014, 9, 1)
                    .unwrap()
                    .and_hms_opt(0, 0, 0)
                    .unwrap(),
                step_seconds: 3600,
                values,
            }],
        }
    }

    fn covs(series: &SeriesSet<f64>) -> Vec<CovariateMatrix<f64>> {
        series
            .instances
            .iter()
            .map(|i| make_covariates(i.start, i.len(), i.step_seconds))
            .collect()
    }

    #[test]
    fn consecutive_spec_reduces_to_teacher_forced_window() {
        let series = toy_series((1..=10).map(f64::from).collect());
        let cov = covs(&series);
        let spec = WindowSpec {
            instance: 0,
            context: vec![2, 3, 4],
            horizon_start: 5,
            horizon_len: 2,
            mode: SamplerMode::Vanilla,
        };
        let batch = build_batch(&[spec], &series, &cov, ScalerKind::OnePlusMean, 3).unwrap();
        let w = &batch.windows[0];
        // nu anchored at index 4 over width 3: 1 + mean(3,4,5) = 5
        assert_eq!(w.scale, 5.0);
        // rows carry z_{t-1}: indices 2,3,4,5,6 -> prev 2,3,4,5,6 over nu
        let prevs: Vec<f64> = (0..w.rows()).map(|r| w.inputs[(r, 0)] * w.scale).collect();
        for (p, e) in prevs.iter().zip([2.0, 3.0, 4.0, 5.0, 6.0]) {
            assert!((p - e).abs() < 1e-10);
        }
        let targets: Vec<f64> = w.targets.iter().map(|t| t * w.scale).collect();
        for (t, e) in targets.iter().zip([3.0, 4.0, 5.0, 6.0, 7.0]) {
            assert!((t - e).abs() < 1e-10);
        }
        assert_eq!(w.horizon_rows(), 3..5);
    }

    #[test]
    fn permuted_context_rows_follow_draw_order() {
        // context [7, 2, 5] pairs rows (z_6,x_7), (z_1,x_2), (z_4,x_5).
        let series = toy_series((1..=10).map(f64::from).collect());
        let cov = covs(&series);
        let spec = WindowSpec {
            instance: 0,
            context: vec![7, 2, 5],
            horizon_start: 8,
            horizon_len: 1,
            mode: SamplerMode::Augmented,
        };
        let batch = build_batch(&[spec], &series, &cov, ScalerKind::OnePlusMean, 192).unwrap();
        let w = &batch.windows[0];
        let prevs: Vec<f64> = (0..3).map(|r| w.inputs[(r, 0)] * w.scale).collect();
        // values are 1..10 so z_6 = 7, z_1 = 2, z_4 = 5
        assert_eq!(prevs, vec![7.0, 2.0, 5.0]);
        for (r, &t) in [7usize, 2, 5].iter().enumerate() {
            assert_eq!(w.inputs.row(r)[1..], *cov[0].row(t));
        }
    }

    #[test]
    fn first_step_uses_zero_predecessor() {
        let series = toy_series(vec![5.0; 8]);
        let cov = covs(&series);
        let spec = WindowSpec {
            instance: 0,
            context: vec![0, 1],
            horizon_start: 2,
            horizon_len: 1,
            mode: SamplerMode::Vanilla,
        };
        let batch = build_batch(&[spec], &series, &cov, ScalerKind::OnePlusMean, 2).unwrap();
        assert_eq!(batch.windows[0].inputs[(0, 0)], 0.0);
    }

    #[test]
    fn descale_round_trip_recovers_original_values() {
        let mut rng = crate::rng::stream(21, "batch-roundtrip", 0);
        let values: Vec<f64> = (0..300)
            .map(|_| rand::Rng::random::<f64>(&mut rng) * 50.0)
            .collect();
        let series = toy_series(values.clone());
        let cov = covs(&series);
        for _ in 0..200 {
            let spec = super::super::sampler::sample_window(
                SamplerMode::Augmented,
                &mut rng,
                0,
                300,
                20,
                5,
                50,
            )
            .unwrap();
            let batch =
                build_batch(&[spec.clone()], &series, &cov, ScalerKind::OnePlusMean, 192).unwrap();
            let w = &batch.windows[0];
            for (r, &t) in spec
                .context
                .iter()
                .chain(spec.horizon_indices().collect::<Vec<_>>().iter())
                .enumerate()
            {
                let recovered = w.targets[r] * w.scale;
                assert!((recovered - values[t]).abs() <= 1e-10 * values[t].abs().max(1.0));
            }
        }
    }

    #[test]
    fn padded_windows_scale_from_real_data_only() {
        // 3 pad zeros before values ~50; a window whose scale anchor falls
        // inside the pad must not degenerate to nu = 1
        let mut values = vec![0.0, 0.0, 0.0];
        values.extend(vec![50.0; 7]);
        let series = toy_series(values);
        let cov = covs(&series);
        let spec = WindowSpec {
            instance: 0,
            context: vec![0, 1, 2],
            horizon_start: 3,
            horizon_len: 2,
            mode: SamplerMode::Vanilla,
        };
        let batch =
            build_batch_padded(&[spec.clone()], &series, &cov, ScalerKind::OnePlusMean, 4, 3)
                .unwrap();
        // anchor clipped to the first real step: nu = 1 + |50|
        assert_eq!(batch.windows[0].scale, 51.0);
        // without pad awareness the all-zero span would have given 1.0
        let unaware = build_batch(&[spec], &series, &cov, ScalerKind::OnePlusMean, 4).unwrap();
        assert_eq!(unaware.windows[0].scale, 1.0);

        // fully-real windows are unaffected by the pad argument
        let spec2 = WindowSpec {
            instance: 0,
            context: vec![5, 6],
            horizon_start: 7,
            horizon_len: 2,
            mode: SamplerMode::Vanilla,
        };
        let a = build_batch_padded(&[spec2.clone()], &series, &cov, ScalerKind::OnePlusMean, 3, 3)
            .unwrap();
        let b = build_batch(&[spec2], &series, &cov, ScalerKind::OnePlusMean, 3).unwrap();
        assert_eq!(a.windows[0].scale.to_bits(), b.windows[0].scale.to_bits());
    }

    #[test]
    fn out_of_range_spec_is_reported_with_identity() {
        let series = toy_series(vec![1.0; 10]);
        let cov = covs(&series);
        let spec = WindowSpec {
            instance: 0,
            context: vec![5, 6],
            horizon_start: 8,
            horizon_len: 4,
            mode: SamplerMode::Augmented,
        };
        let err = build_batch(&[spec], &series, &cov, ScalerKind::OnePlusMean, 2).unwrap_err();
        assert!(err.to_string().contains("instance 0"), "{err}");
    }

    #[test]
    fn validation_split_is_disjoint_and_deterministic() {
        let specs: Vec<WindowSpec> = (0..100)
            .map(|i| WindowSpec {
                instance: i,
                context: vec![0],
                horizon_start: 1,
                horizon_len: 1,
                mode: SamplerMode::Vanilla,
            })
            .collect();
        let mut rng = crate::rng::stream(5, "val-split", 0);
        let (train, val) = validation_split(specs.clone(), 0.10, &mut rng).unwrap();
        assert_eq!(train.len(), 90);
        assert_eq!(val.len(), 10);
        let mut rng2 = crate::rng::stream(5, "val-split", 0);
        let (train2, val2) = validation_split(specs, 0.10, &mut rng2).unwrap();
        assert_eq!(train, train2);
        assert_eq!(val, val2);
    }

    #[test]
    fn validation_split_keeps_at_least_one_each_side() {
        let specs: Vec<WindowSpec> = (0..2)
            .map(|i| WindowSpec {
                instance: i,
                context: vec![0],
                horizon_start: 1,
                horizon_len: 1,
                mode: SamplerMode::Vanilla,
            })
            .collect();
        let mut rng = crate::rng::stream(5, "val-split-min", 0);
        let (train, val) = validation_split(specs, 0.01, &mut rng).unwrap();
        assert_eq!(train.len(), 1);
        assert_eq!(val.len(), 1);

        let err = validation_split(Vec::new(), 0.5, &mut rng);
        assert!(err.is_err());
    }
}
