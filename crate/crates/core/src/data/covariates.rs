//! Calendar covariates: hour-of-day and day-of-week features.

use chrono::{Datelike, Duration, NaiveDateTime, Timelike};

use crate::scalar::Scalar;

/// Number of calendar features produced by [`make_covariates`].
pub const CALENDAR_DIM: usize = 2;

/// Per time step covariate vectors `x_t`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CovariateMatrix<T> {
    len: usize,
    dim: usize,
    data: Vec<T>,
}

impl<T: Scalar> CovariateMatrix<T> {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, t: usize) -> &[T] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }
}

/// Covariates for `n` steps from `start` at the given frequency.
///
/// Hour feature is `hour/23 - 0.5` in `[-0.5, 0.5]`; day feature is
/// `weekday/6 - 0.5` with Monday = 0. Non-hourly frequencies map the hour
/// feature from clock time.
pub fn make_covariates<T: Scalar>(
    start: NaiveDateTime,
    n: usize,
    step_seconds: u64,
) -> CovariateMatrix<T> {
    let mut data = Vec::with_capacity(n * CALENDAR_DIM);
    for t in 0..n {
        let ts = start + Duration::seconds(step_seconds as i64 * t as i64);
        let hour = T::of(f64::from(ts.hour()) / 23.0 - 0.5);
        let day = T::of(f64::from(ts.weekday().num_days_from_monday()) / 6.0 - 0.5);
        data.push(hour);
        data.push(day);
    }
    CovariateMatrix {
        len: n,
        dim: CALENDAR_DIM,
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{NaiveDate, Weekday};

    #[test]
    fn monday_midnight_hits_both_minima() {
        // Independent calendar check: 2014-09-01 was a Monday.
        let start = NaiveDate::from_ymd_opt(2014, 9, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        assert_eq!(start.weekday(), Weekday::Mon);
        let cov = make_covariates::<f64>(start, 1, 3600);
        assert_eq!(cov.row(0), &[-0.5, -0.5]);
    }

    #[test]
    fn sunday_11pm_hits_both_maxima() {
        let ts = NaiveDate::from_ymd_opt(2014, 9, 7).unwrap().and_hms_opt(23, 0, 0).unwrap();
        assert_eq!(ts.weekday(), Weekday::Sun);
        let cov = make_covariates::<f64>(ts, 1, 3600);
        assert_eq!(cov.row(0), &[0.5, 0.5]);
    }

    #[test]
    fn empty_request_gives_empty_matrix() {
        let start = NaiveDate::from_ymd_opt(2014, 9, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        let cov = make_covariates::<f64>(start, 0, 3600);
        assert!(cov.is_empty());
        assert_eq!(cov.dim(), CALENDAR_DIM);
    }

    #[test]
    fn features_stay_in_declared_range() {
        let start = NaiveDate::from_ymd_opt(2013, 12, 30).unwrap().and_hms_opt(5, 0, 0).unwrap();
        let cov = make_covariates::<f64>(start, 500, 3600);
        for t in 0..cov.len() {
            for &v in cov.row(t) {
                assert!((-0.5..=0.5).contains(&v));
            }
        }
    }
}
