//! Deterministic synthetic datasets for benchmarks and tests.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Timelike};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::rng::stream;
use crate::scalar::Scalar;

use super::series::{SeriesInstance, SeriesSet};

fn default_start() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2014, 6, 2)
        .unwrap()
        .and_hms_opt(0, 0, 0)
        .unwrap()
}

/// `k` noisy sinusoid instances of the given period (hours). Bases and
/// amplitudes vary per instance; values stay positive.
pub fn seasonal_series<T: Scalar>(
    k: usize,
    len: usize,
    period: usize,
    noise_sd: f64,
    seed: u64,
) -> SeriesSet<T> {
    let start = default_start();
    let instances = (0..k)
        .map(|i| {
            let mut rng = stream(seed, "seasonal", i as u64);
            let base = 8.0 + 4.0 * rng.random::<f64>();
            let amp = 2.0 + 2.0 * rng.random::<f64>();
            let phase = rng.random::<f64>() * period as f64;
            let values = (0..len)
                .map(|t| {
                    let angle =
                        2.0 * std::f64::consts::PI * (t as f64 + phase) / period as f64;
                    let eps: f64 = rng.sample(StandardNormal);
                    T::of((base + amp * angle.sin() + noise_sd * eps).max(0.05))
                })
                .collect();
            SeriesInstance {
                id: format!("sine_{i:03}"),
                start,
                step_seconds: 3600,
                values,
            }
        })
        .collect();
    SeriesSet { instances }
}

fn daily_profile(hour: f64) -> f64 {
    let bump = |center: f64, width: f64| {
        let mut d = (hour - center).abs();
        d = d.min(24.0 - d);
        (-d * d / (2.0 * width * width)).exp()
    };
    0.40 + 0.28 * bump(8.5, 2.4) + 0.45 * bump(19.0, 3.0)
}

/// Electricity-like hourly household loads: per-household scale and phase,
/// daily double peak, weekday/weekend factor, mild noise.
pub fn household_series<T: Scalar>(
    k: usize,
    len_hours: usize,
    start: NaiveDateTime,
    seed: u64,
) -> SeriesSet<T> {
    let instances = (0..k)
        .map(|i| {
            let mut rng = stream(seed, "household", i as u64);
            let scale = (0.6 + 2.4 * rng.random::<f64>()) * 60.0;
            let shift = rng.random::<f64>() * 3.0 - 1.5;
            let weekend = 0.68 + 0.12 * rng.random::<f64>();
            let values = (0..len_hours)
                .map(|t| {
                    let ts = start + Duration::seconds(3600 * t as i64);
                    let hour = f64::from(ts.hour()) + shift;
                    let dow = ts.weekday().num_days_from_monday();
                    let day_factor = if dow >= 5 { weekend } else { 1.0 };
                    let eps: f64 = rng.sample(StandardNormal);
                    let level = daily_profile(hour.rem_euclid(24.0)) * day_factor;
                    T::of((scale * level * (1.0 + 0.06 * eps)).max(0.1))
                })
                .collect();
            SeriesInstance {
                id: format!("MT_{:03}", i + 1),
                start,
                step_seconds: 3600,
                values,
            }
        })
        .collect();
    SeriesSet { instances }
}

/// Writes hourly series in the raw UCI electricity layout: 15-minute rows,
/// semicolon separators, decimal commas. Each hour expands to four
/// sub-readings whose mean is the hourly value.
pub fn write_electricity_raw<T: Scalar>(series: &SeriesSet<T>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "\"ts\"")?;
    for inst in &series.instances {
        write!(w, ";\"{}\"", inst.id)?;
    }
    writeln!(w)?;
    let len = series.instances[0].len();
    let start = series.instances[0].start;
    // jitter pattern sums to zero over the four sub-intervals
    let jitter = [0.02, -0.02, 0.01, -0.01];
    for t in 0..len {
        for (q, j) in jitter.iter().enumerate() {
            let ts = start + Duration::seconds(3600 * t as i64 + 900 * (q as i64 + 1));
            write!(w, "\"{}\"", ts.format("%Y-%m-%d %H:%M:%S"))?;
            for inst in &series.instances {
                let v = inst.values[t].to_f64() * (1.0 + j);
                let formatted = format!("{v:.6}").replace('.', ",");
                write!(w, ";{formatted}")?;
            }
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ingest::{load_series, SeriesFormat};

    #[test]
    fn seasonal_series_is_deterministic_and_positive() {
        let a = seasonal_series::<f64>(3, 500, 336, 0.3, 7);
        let b = seasonal_series::<f64>(3, 500, 336, 0.3, 7);
        assert_eq!(a, b);
        assert!(a.instances.iter().all(|i| i.values.iter().all(|&v| v > 0.0)));
        a.validate().unwrap();
    }

    #[test]
    fn household_series_shows_daily_structure() {
        let s = household_series::<f64>(2, 24 * 14, default_start(), 3);
        s.validate().unwrap();
        let v = &s.instances[0].values;
        // evening peak above the overnight trough on the first day
        let night: f64 = v[2..5].iter().sum::<f64>() / 3.0;
        let evening: f64 = v[18..21].iter().sum::<f64>() / 3.0;
        assert!(evening > night * 1.3, "evening {evening} night {night}");
    }

    #[test]
    fn raw_writer_round_trips_through_electricity_parser() {
        let s = household_series::<f64>(3, 48, default_start(), 11);
        let f = tempfile::NamedTempFile::new().unwrap();
        write_electricity_raw(&s, f.path()).unwrap();
        let loaded = load_series::<f64>(f.path(), SeriesFormat::Electricity).unwrap();
        assert_eq!(loaded.k(), 3);
        assert_eq!(loaded.instances[0].len(), 48);
        for (a, b) in loaded.instances[0].values.iter().zip(&s.instances[0].values) {
            assert!((a - b).abs() < 1e-4 * b.abs().max(1.0), "{a} vs {b}");
        }
    }
}
