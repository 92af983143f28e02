//! Time-series instances with timestamps and uniform frequency.

use chrono::{Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

/// One observed series: identifier, start timestamp, uniform step and
/// values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesInstance<T> {
    pub id: String,
    pub start: NaiveDateTime,
    pub step_seconds: u64,
    pub values: Vec<T>,
}

impl<T: Scalar> SeriesInstance<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp_at(&self, index: usize) -> NaiveDateTime {
        self.start + Duration::seconds(self.step_seconds as i64 * index as i64)
    }

    /// Grid index of `ts`, if it falls exactly on this instance's grid.
    pub fn index_of(&self, ts: NaiveDateTime) -> Option<usize> {
        let delta = (ts - self.start).num_seconds();
        if delta < 0 || self.step_seconds == 0 {
            return None;
        }
        let step = self.step_seconds as i64;
        if delta % step != 0 {
            return None;
        }
        let idx = (delta / step) as usize;
        (idx <= self.len()).then_some(idx)
    }

    /// Sub-series `values[from..to]` with the start timestamp advanced.
    pub fn slice(&self, from: usize, to: usize) -> SeriesInstance<T> {
        SeriesInstance {
            id: self.id.clone(),
            start: self.timestamp_at(from),
            step_seconds: self.step_seconds,
            values: self.values[from..to].to_vec(),
        }
    }
}

/// Prepends `n` zeros and shifts the start timestamp back accordingly.
pub fn zero_pad<T: Scalar>(instance: &SeriesInstance<T>, n: usize) -> SeriesInstance<T> {
    let mut values = vec![T::zero(); n];
    values.extend_from_slice(&instance.values);
    SeriesInstance {
        id: instance.id.clone(),
        start: instance.start - Duration::seconds(instance.step_seconds as i64 * n as i64),
        step_seconds: instance.step_seconds,
        values,
    }
}

/// The `k` time-series instances of a dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesSet<T> {
    pub instances: Vec<SeriesInstance<T>>,
}

impl<T: Scalar> SeriesSet<T> {
    pub fn k(&self) -> usize {
        self.instances.len()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, inst) in self.instances.iter().enumerate() {
            if inst.values.is_empty() {
                return Err(CoreError::InvalidInput(format!(
                    "instance {i} ({}) has no values",
                    inst.id
                )));
            }
            if inst.step_seconds == 0 {
                return Err(CoreError::InvalidInput(format!(
                    "instance {i} ({}) has zero step",
                    inst.id
                )));
            }
            if let Some(pos) = inst.values.iter().position(|v| !v.is_finite()) {
                return Err(CoreError::InvalidInput(format!(
                    "instance {i} ({}) has non-finite value at step {}",
                    inst.id,
                    pos + 1
                )));
            }
        }
        Ok(())
    }

    pub fn zero_pad(&self, n: usize) -> SeriesSet<T> {
        SeriesSet {
            instances: self.instances.iter().map(|i| zero_pad(i, n)).collect(),
        }
    }

    /// Restricts every instance to `[from, to)`; both must be on the grid.
    pub fn slice_time(&self, from: NaiveDateTime, to: NaiveDateTime) -> Result<SeriesSet<T>> {
        let mut instances = Vec::with_capacity(self.k());
        for (i, inst) in self.instances.iter().enumerate() {
            let a = inst.index_of(from).ok_or_else(|| {
                CoreError::InvalidInput(format!(
                    "instance {i} ({}): {from} not on the sampling grid starting {}",
                    inst.id, inst.start
                ))
            })?;
            let b = inst.index_of(to).ok_or_else(|| {
                CoreError::InvalidInput(format!(
                    "instance {i} ({}): {to} outside the observed range",
                    inst.id
                ))
            })?;
            if b > inst.len() || a >= b {
                return Err(CoreError::InvalidInput(format!(
                    "instance {i} ({}): empty or out-of-range slice {a}..{b}",
                    inst.id
                )));
            }
            instances.push(inst.slice(a, b));
        }
        Ok(SeriesSet { instances })
    }

    pub fn min_len(&self) -> usize {
        self.instances.iter().map(SeriesInstance::len).min().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn inst(values: Vec<f64>) -> SeriesInstance<f64> {
        SeriesInstance {
            id: "t".into(),
            start: NaiveDate::from_ymd_opt(2014, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap(),
            step_seconds: 3600,
            values,
        }
    }

    #[test]
    fn zero_pad_identity_and_prepend() {
        let s = inst(vec![1.0, 2.0]);
        assert_eq!(zero_pad(&s, 0), s);
        let p = zero_pad(&s, 3);
        assert_eq!(p.values, vec![0.0, 0.0, 0.0, 1.0, 2.0]);
        // timestamps shift back by 3 hours
        assert_eq!(p.timestamp_at(3), s.timestamp_at(0));
    }

    #[test]
    fn index_of_is_grid_exact() {
        let s = inst(vec![1.0; 10]);
        assert_eq!(s.index_of(s.timestamp_at(4)), Some(4));
        let off = s.timestamp_at(4) + Duration::seconds(1);
        assert_eq!(s.index_of(off), None);
        assert_eq!(s.index_of(s.start - Duration::seconds(3600)), None);
    }

    #[test]
    fn slice_time_round_trips() {
        let s = SeriesSet { instances: vec![inst((0..48).map(f64::from).collect())] };
        let from = s.instances[0].timestamp_at(12);
        let to = s.instances[0].timestamp_at(36);
        let cut = s.slice_time(from, to).unwrap();
        assert_eq!(cut.instances[0].len(), 24);
        assert_eq!(cut.instances[0].values[0], 12.0);
        assert_eq!(cut.instances[0].start, from);
    }

    #[test]
    fn validate_rejects_non_finite() {
        let mut s = SeriesSet { instances: vec![inst(vec![1.0, f64::NAN])] };
        assert!(s.validate().is_err());
        s.instances[0].values[1] = 2.0;
        assert!(s.validate().is_ok());
    }
}
