//! Benchmark reports: per-trial records, summaries, plot data.

use serde::{Deserialize, Serialize};

use crate::data::SamplerMode;

/// Quantile losses of one trial.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialQl {
    pub trial: usize,
    pub seed: u64,
    /// `(rho, QL_rho)` pairs.
    pub ql: Vec<(f64, f64)>,
}

/// Per-dataset, per-range, per-mode results over all trials.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ForecastReport {
    pub dataset: String,
    pub range_label: String,
    pub mode: SamplerMode,
    pub quantiles: Vec<f64>,
    pub trials: Vec<TrialQl>,
}

impl ForecastReport {
    /// Mean and sample standard deviation of `QL_rho` across trials.
    pub fn mean_sd(&self, rho: f64) -> (f64, f64) {
        let values: Vec<f64> = self
            .trials
            .iter()
            .filter_map(|t| {
                t.ql
                    .iter()
                    .find(|(r, _)| (r - rho).abs() < 1e-12)
                    .map(|(_, v)| *v)
            })
            .collect();
        summarize(&values)
    }
}

/// Mean and sample standard deviation (0 for fewer than 2 values).
pub fn summarize(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One machine-readable record per dataset x range x mode x rho x trial.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrialRecord {
    pub dataset: String,
    pub range_label: String,
    pub mode: String,
    pub trial: usize,
    pub seed: u64,
    pub rho: f64,
    pub ql: f64,
}

pub fn to_records(reports: &[ForecastReport]) -> Vec<TrialRecord> {
    let mut out = Vec::new();
    for r in reports {
        for t in &r.trials {
            for &(rho, ql) in &t.ql {
                out.push(TrialRecord {
                    dataset: r.dataset.clone(),
                    range_label: r.range_label.clone(),
                    mode: r.mode.to_string(),
                    trial: t.trial,
                    seed: t.seed,
                    rho,
                    ql,
                });
            }
        }
    }
    out
}

/// Plot-data CSV: `mode,trial,rho,ql` rows, ready for external plotting.
pub fn plot_csv(reports: &[ForecastReport]) -> String {
    let mut out = String::from("mode,trial,rho,ql\n");
    for rec in to_records(reports) {
        out.push_str(&format!(
            "{},{},{},{}\n",
            rec.mode, rec.trial, rec.rho, rec.ql
        ));
    }
    out
}

/// Human-readable summary table with `mean ± sd` cells per mode and rho.
pub fn human_table(reports: &[ForecastReport]) -> String {
    let mut out = String::new();
    if reports.is_empty() {
        return out;
    }
    let quantiles = &reports[0].quantiles;
    out.push_str(&format!("{:<12} {:<10} {:<8}", "dataset", "range", "mode"));
    for rho in quantiles {
        out.push_str(&format!(" {:>20}", format!("QL_{rho}")));
    }
    out.push('\n');
    for r in reports {
        out.push_str(&format!(
            "{:<12} {:<10} {:<8}",
            r.dataset, r.range_label, r.mode
        ));
        for &rho in quantiles {
            let (mean, sd) = r.mean_sd(rho);
            out.push_str(&format!(" {:>20}", format!("{mean:.4} ± {sd:.4}")));
        }
        out.push('\n');
    }
    out
}
