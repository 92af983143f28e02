//! File-format readers and the normalized CSV writer.
//!
//! Three input formats are supported:
//!
//! * `electricity` — semicolon-separated UCI load-diagrams layout: first
//!   column `yyyy-mm-dd hh:mm:ss` timestamps, remaining columns
//!   decimal-comma reals at 15-minute frequency; resampled to hourly by
//!   the arithmetic mean of the 4 sub-intervals.
//! * `traffic` — PEMS-style matrix text, one day per line as
//!   `[[lane rows separated by ';', space-separated 10-minute values]]`,
//!   days chronological; resampled to hourly by the mean of 6.
//! * `generic_csv` — wide CSV with a `timestamp,id1,id2,…` header,
//!   ISO-8601 timestamps, dot-decimal reals, frequency inferred from the
//!   first two rows.
//!
//! All readers stream line by line; parse errors carry 1-based line
//! numbers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime, Timelike};

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

use super::series::{SeriesInstance, SeriesSet};

/// Supported on-disk dataset layouts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesFormat {
    Electricity,
    Traffic,
    GenericCsv,
}

impl std::str::FromStr for SeriesFormat {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "electricity" => Ok(SeriesFormat::Electricity),
            "traffic" => Ok(SeriesFormat::Traffic),
            "generic_csv" | "generic-csv" | "csv" => Ok(SeriesFormat::GenericCsv),
            other => Err(CoreError::InvalidConfig(format!(
                "unknown dataset format '{other}' (expected electricity|traffic|generic_csv)"
            ))),
        }
    }
}

/// Loader knobs that are not derivable from the files themselves.
#[derive(Clone, Copy, Debug)]
pub struct IngestOptions {
    /// Timestamp of the first traffic sample (PEMS files carry none).
    pub traffic_start: NaiveDateTime,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            traffic_start: NaiveDate::from_ymd_opt(2008, 1, 1)
                .unwrap()
                .and_hms_opt(0, 0, 0)
                .unwrap(),
        }
    }
}

pub fn load_series<T: Scalar>(path: &Path, format: SeriesFormat) -> Result<SeriesSet<T>> {
    load_series_with(path, format, IngestOptions::default())
}

pub fn load_series_with<T: Scalar>(
    path: &Path,
    format: SeriesFormat,
    opts: IngestOptions,
) -> Result<SeriesSet<T>> {
    let set = match format {
        SeriesFormat::Electricity => parse_electricity(path)?,
        SeriesFormat::Traffic => parse_traffic(path, opts.traffic_start)?,
        SeriesFormat::GenericCsv => parse_generic_csv(path)?,
    };
    set.validate()?;
    Ok(set)
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> CoreError {
    CoreError::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim().trim_matches('"');
    NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S"))
        .ok()
}

fn parse_decimal_comma(s: &str) -> Option<f64> {
    let cleaned = s.trim().trim_matches('"').replace(',', ".");
    if cleaned.is_empty() {
        return None;
    }
    cleaned.parse::<f64>().ok()
}

fn parse_electricity<T: Scalar>(path: &Path) -> Result<SeriesSet<T>> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate();

    let (first_no, first) = match lines.next() {
        Some((no, line)) => (no + 1, line?),
        None => return Err(parse_err(path, 1, "empty file")),
    };
    let first = first.trim_start_matches('\u{feff}').to_string();
    let head: Vec<&str> = first.split(';').collect();
    if head.len() < 2 {
        return Err(parse_err(path, first_no, "expected ';'-separated columns"));
    }

    let mut ids: Vec<String>;
    let mut raw: Vec<Vec<f64>>;
    let mut stamps: Vec<NaiveDateTime> = Vec::new();
    let header_detected = parse_timestamp(head[0]).is_none();
    if header_detected {
        ids = head[1..]
            .iter()
            .map(|s| s.trim().trim_matches('"').to_string())
            .collect();
        raw = vec![Vec::new(); ids.len()];
    } else {
        ids = (1..head.len()).map(|i| format!("MT_{i:03}")).collect();
        raw = vec![Vec::new(); ids.len()];
        push_electricity_row(path, first_no, &head, &mut raw, &mut stamps)?;
    }
    if ids.is_empty() {
        return Err(parse_err(path, first_no, "no value columns"));
    }

    for (no, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(';').collect();
        if fields.len() != ids.len() + 1 {
            return Err(parse_err(
                path,
                no + 1,
                format!("expected {} columns, got {}", ids.len() + 1, fields.len()),
            ));
        }
        push_electricity_row(path, no + 1, &fields, &mut raw, &mut stamps)?;
    }
    if stamps.len() < 4 {
        return Err(parse_err(path, 1, "need at least one full hour of 15-minute rows"));
    }
    for w in stamps.windows(2) {
        if (w[1] - w[0]).num_seconds() != 900 {
            let at = stamps.iter().position(|t| *t == w[1]).unwrap_or(0);
            return Err(parse_err(
                path,
                at + if header_detected { 2 } else { 1 },
                format!("non-15-minute spacing between {} and {}", w[0], w[1]),
            ));
        }
    }

    // Mean of each group of 4 sub-intervals; trailing partial hour dropped.
    let hours = stamps.len() / 4;
    let start = stamps[0]
        .with_minute(0)
        .and_then(|t| t.with_second(0))
        .unwrap_or(stamps[0]);
    let mut instances = Vec::with_capacity(ids.len());
    for (col, id) in ids.drain(..).enumerate() {
        let series = &raw[col];
        let values: Vec<T> = (0..hours)
            .map(|h| {
                let s: f64 = series[h * 4..h * 4 + 4].iter().sum();
                T::of(s / 4.0)
            })
            .collect();
        instances.push(SeriesInstance {
            id,
            start,
            step_seconds: 3600,
            values,
        });
    }
    Ok(SeriesSet { instances })
}

fn push_electricity_row(
    path: &Path,
    line_no: usize,
    fields: &[&str],
    raw: &mut [Vec<f64>],
    stamps: &mut Vec<NaiveDateTime>,
) -> Result<()> {
    let ts = parse_timestamp(fields[0])
        .ok_or_else(|| parse_err(path, line_no, format!("bad timestamp '{}'", fields[0])))?;
    stamps.push(ts);
    for (col, field) in fields[1..].iter().enumerate() {
        let v = parse_decimal_comma(field)
            .ok_or_else(|| parse_err(path, line_no, format!("bad value '{field}'")))?;
        raw[col].push(v);
    }
    Ok(())
}

fn parse_generic_csv<T: Scalar>(path: &Path) -> Result<SeriesSet<T>> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line?,
        None => return Err(parse_err(path, 1, "empty file")),
    };
    let header = header.trim_start_matches('\u{feff}');
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 2 {
        return Err(parse_err(path, 1, "expected header 'timestamp,id1,…'"));
    }
    let ids: Vec<String> = cols[1..].iter().map(|s| s.trim().to_string()).collect();

    let mut stamps: Vec<NaiveDateTime> = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); ids.len()];
    for (no, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != ids.len() + 1 {
            return Err(parse_err(
                path,
                no + 1,
                format!("expected {} columns, got {}", ids.len() + 1, fields.len()),
            ));
        }
        let ts = parse_timestamp(fields[0])
            .ok_or_else(|| parse_err(path, no + 1, format!("bad timestamp '{}'", fields[0])))?;
        stamps.push(ts);
        for (col, field) in fields[1..].iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                parse_err(path, no + 1, format!("bad value '{field}'"))
            })?;
            columns[col].push(v);
        }
    }
    if stamps.is_empty() {
        return Err(parse_err(path, 2, "no data rows"));
    }
    let step_seconds = if stamps.len() >= 2 {
        let d = (stamps[1] - stamps[0]).num_seconds();
        if d <= 0 {
            return Err(parse_err(path, 3, "timestamps not increasing"));
        }
        d as u64
    } else {
        3600
    };
    for (i, w) in stamps.windows(2).enumerate() {
        if (w[1] - w[0]).num_seconds() as u64 != step_seconds {
            return Err(parse_err(
                path,
                i + 3,
                format!("non-uniform frequency at {}", w[1]),
            ));
        }
    }
    let start = stamps[0];
    let instances = ids
        .into_iter()
        .zip(columns)
        .map(|(id, vals)| SeriesInstance {
            id,
            start,
            step_seconds,
            values: vals.into_iter().map(T::of).collect(),
        })
        .collect();
    Ok(SeriesSet { instances })
}

fn parse_traffic<T: Scalar>(path: &Path, start: NaiveDateTime) -> Result<SeriesSet<T>> {
    let reader = BufReader::new(File::open(path)?);
    let mut lanes: Vec<Vec<f64>> = Vec::new();
    let mut days = 0usize;
    for (no, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim().trim_start_matches('\u{feff}');
        if trimmed.is_empty() {
            continue;
        }
        let body = trimmed
            .trim_start_matches('[')
            .trim_end_matches(']')
            .trim_start_matches('[')
            .trim_end_matches(']');
        let rows: Vec<&str> = body.split(';').collect();
        if lanes.is_empty() {
            lanes = vec![Vec::new(); rows.len()];
        } else if rows.len() != lanes.len() {
            return Err(parse_err(
                path,
                no + 1,
                format!("expected {} lanes, got {}", lanes.len(), rows.len()),
            ));
        }
        let mut day_len = None;
        for (lane, row) in rows.iter().enumerate() {
            let values: std::result::Result<Vec<f64>, _> =
                row.split_whitespace().map(str::parse::<f64>).collect();
            let values = values
                .map_err(|e| parse_err(path, no + 1, format!("bad value in lane {}: {e}", lane + 1)))?;
            match day_len {
                None => day_len = Some(values.len()),
                Some(n) if n != values.len() => {
                    return Err(parse_err(
                        path,
                        no + 1,
                        format!("lane {} has {} samples, expected {n}", lane + 1, values.len()),
                    ))
                }
                _ => {}
            }
            lanes[lane].extend(values);
        }
        let day_len = day_len.unwrap_or(0);
        if day_len % 6 != 0 {
            return Err(parse_err(
                path,
                no + 1,
                format!("day length {day_len} not a multiple of 6 ten-minute samples"),
            ));
        }
        days += 1;
    }
    if days == 0 || lanes.is_empty() {
        return Err(parse_err(path, 1, "no traffic data"));
    }
    // 10-minute samples -> hourly mean of 6.
    let hours = lanes[0].len() / 6;
    let instances = lanes
        .iter()
        .enumerate()
        .map(|(i, lane)| SeriesInstance {
            id: format!("lane_{:03}", i + 1),
            start,
            step_seconds: 3600,
            values: (0..hours)
                .map(|h| T::of(lane[h * 6..h * 6 + 6].iter().sum::<f64>() / 6.0))
                .collect(),
        })
        .collect();
    Ok(SeriesSet { instances })
}

/// Writes the normalized wide-CSV form (`timestamp,id1,id2,…`).
pub fn write_generic_csv<T: Scalar>(series: &SeriesSet<T>, path: &Path) -> Result<()> {
    if series.k() == 0 {
        return Err(CoreError::InvalidInput("no instances to write".into()));
    }
    let len = series.instances[0].len();
    let start = series.instances[0].start;
    let step = series.instances[0].step_seconds;
    for inst in &series.instances {
        if inst.len() != len || inst.start != start || inst.step_seconds != step {
            return Err(CoreError::InvalidInput(
                "generic CSV requires aligned instances of equal length".into(),
            ));
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "timestamp")?;
    for inst in &series.instances {
        write!(w, ",{}", inst.id)?;
    }
    writeln!(w)?;
    for t in 0..len {
        write!(w, "{}", series.instances[0].timestamp_at(t).format("%Y-%m-%dT%H:%M:%S"))?;
        for inst in &series.instances {
            write!(w, ",{}", inst.values[t].to_f64())?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
