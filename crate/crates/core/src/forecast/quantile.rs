//! Empirical quantiles and the normalized rho-quantile loss.

use crate::error::{CoreError, Result};
use crate::kernel::Matrix;
use crate::scalar::Scalar;

/// Per-step empirical rho-quantile of `n` sampled trajectories
/// (`n x horizon`): the `ceil(rho * n)`-th order statistic, no
/// interpolation.
pub fn empirical_quantile<T: Scalar>(trajectories: &Matrix<T>, rho: f64) -> Vec<T> {
    let n = trajectories.rows();
    debug_assert!(n >= 1);
    debug_assert!(rho > 0.0 && rho < 1.0);
    // the tiny slack guards float artifacts like 0.3 * 10 -> 3.0000000000000004
    let rank = ((rho * n as f64) - 1e-9).ceil() as usize;
    let rank = rank.clamp(1, n);
    let mut column = vec![T::zero(); n];
    (0..trajectories.cols())
        .map(|step| {
            for (s, c) in column.iter_mut().enumerate() {
                *c = trajectories[(s, step)];
            }
            column.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
            column[rank - 1]
        })
        .collect()
}

/// Joint accumulator for `QL_rho = 2 * sum P_rho / sum |z|` across
/// instances and steps (single denominator).
#[derive(Clone, Copy, Debug)]
pub struct QlAccumulator {
    rho: f64,
    penalty: f64,
    abs_sum: f64,
}

impl QlAccumulator {
    pub fn new(rho: f64) -> Self {
        QlAccumulator {
            rho,
            penalty: 0.0,
            abs_sum: 0.0,
        }
    }

    pub fn add<T: Scalar>(&mut self, z: T, zhat: T) {
        let z = z.to_f64();
        let zhat = zhat.to_f64();
        self.penalty += if z > zhat {
            self.rho * (z - zhat)
        } else {
            (1.0 - self.rho) * (zhat - z)
        };
        self.abs_sum += z.abs();
    }

    pub fn add_series<T: Scalar>(&mut self, z: &[T], zhat: &[T]) {
        for (&a, &b) in z.iter().zip(zhat) {
            self.add(a, b);
        }
    }

    pub fn value(&self) -> Result<f64> {
        if self.abs_sum == 0.0 {
            return Err(CoreError::InvalidInput(
                "quantile loss undefined: sum |z| = 0".into(),
            ));
        }
        Ok(2.0 * self.penalty / self.abs_sum)
    }
}

/// `QL_rho(z, zhat)` over aligned slices.
pub fn quantile_loss<T: Scalar>(z: &[T], zhat: &[T], rho: f64) -> Result<f64> {
    if z.len() != zhat.len() {
        return Err(CoreError::Shape {
            op: "quantile_loss",
            expected: format!("{} forecasts", z.len()),
            got: format!("{}", zhat.len()),
        });
    }
    let mut acc = QlAccumulator::new(rho);
    acc.add_series(z, zhat);
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn perfect_forecast_scores_zero() {
        let z = [10.0f64, 20.0, 0.5];
        assert_eq!(quantile_loss(&z, &z, 0.5).unwrap(), 0.0);
        assert_eq!(quantile_loss(&z, &z, 0.9).unwrap(), 0.0);
    }

    #[test]
    fn hand_evaluated_rho_09_case() {
        // 2 * (0.9*2 + 0.1*5) / 30 = 0.15333...
        let z = [10.0f64, 20.0];
        let zhat = [8.0f64, 25.0];
        let got = quantile_loss(&z, &zhat, 0.9).unwrap();
        assert!((got - 0.15333333333333332).abs() < 1e-12, "{got}");
    }

    #[test]
    fn rho_05_is_normalized_absolute_error() {
        // 2 * 0.5 * 3 / 4
        let got = quantile_loss(&[4.0f64], &[1.0], 0.5).unwrap();
        assert_eq!(got, 0.75);
    }

    #[test]
    fn zero_denominator_is_an_error() {
        assert!(quantile_loss(&[0.0f64, 0.0], &[1.0, 2.0], 0.5).is_err());
    }

    #[test]
    fn scale_invariance() {
        let mut rng = crate::rng::stream(51, "ql-scale", 0);
        for _ in 0..50 {
            let z: Vec<f64> = (0..40).map(|_| rng.random::<f64>() * 10.0 + 0.1).collect();
            let zhat: Vec<f64> = (0..40).map(|_| rng.random::<f64>() * 10.0).collect();
            let c = rng.random::<f64>() * 50.0 + 0.1;
            let zc: Vec<f64> = z.iter().map(|v| v * c).collect();
            let zhatc: Vec<f64> = zhat.iter().map(|v| v * c).collect();
            for rho in [0.5, 0.9] {
                let a = quantile_loss(&z, &zhat, rho).unwrap();
                let b = quantile_loss(&zc, &zhatc, rho).unwrap();
                assert!((a - b).abs() < 1e-12 * a.max(1.0));
            }
        }
    }

    #[test]
    fn quantiles_pick_exact_order_statistics() {
        // samples 1..=100 per step
        let n = 100;
        let mut data = Vec::with_capacity(n * 2);
        for s in 0..n {
            data.push((s + 1) as f64);
            data.push((n - s) as f64);
        }
        let traj = Matrix::from_vec(n, 2, data).unwrap();
        let q50 = empirical_quantile(&traj, 0.5);
        assert_eq!(q50, vec![50.0, 50.0]);
        let q90 = empirical_quantile(&traj, 0.9);
        assert_eq!(q90, vec![90.0, 90.0]);
    }

    #[test]
    fn single_trajectory_is_every_quantile() {
        let traj = Matrix::from_vec(1, 3, vec![7.0f64, -2.0, 0.5]).unwrap();
        for rho in [0.1, 0.5, 0.9] {
            assert_eq!(empirical_quantile(&traj, rho), vec![7.0, -2.0, 0.5]);
        }
    }

    #[test]
    fn quantiles_are_monotone_in_rho() {
        let mut rng = crate::rng::stream(52, "ql-mono", 0);
        let n = 37;
        let steps = 11;
        let traj = Matrix::from_vec(
            n,
            steps,
            (0..n * steps).map(|_| rng.random::<f64>() * 8.0 - 4.0).collect(),
        )
        .unwrap();
        let mut prev: Option<Vec<f64>> = None;
        for rho in [0.1, 0.25, 0.5, 0.75, 0.9, 0.99] {
            let q = empirical_quantile(&traj, rho);
            if let Some(p) = &prev {
                for (a, b) in p.iter().zip(&q) {
                    assert!(a <= b);
                }
            }
            prev = Some(q);
        }
    }

    #[test]
    fn awkward_rank_products_round_down_correctly() {
        // 0.3 * 10 = 3.0000000000000004 in f64; the rank must stay 3.
        let traj = Matrix::from_vec(10, 1, (1..=10).map(f64::from).collect()).unwrap();
        assert_eq!(empirical_quantile(&traj, 0.3), vec![3.0]);
    }
}
