//! Experiment protocols: data-efficiency benchmark, sampler ablation, and
//! the long-seasonality synthetic study.

use chrono::{Duration, NaiveDateTime};

use crate::data::synthetic::seasonal_series;
use crate::data::{SamplerConfig, SamplerMode, ScalerKind, SeriesSet};
use crate::error::{CoreError, Result};
use crate::model::{ModelConfig, ModelParams};
use crate::rng::child_seed;
use crate::scalar::Scalar;
use crate::train::{fit, TrainConfig};

use super::predict::{predict_samples, ForecastRequest};
use super::quantile::{empirical_quantile, QlAccumulator};
use super::report::{ForecastReport, TrialQl};

/// Full description of one evaluation run.
#[derive(Clone, Debug)]
pub struct EvalProtocol {
    pub dataset: String,
    /// Weeks of history before the forecast start used for training.
    pub train_weeks: usize,
    pub forecast_start: NaiveDateTime,
    /// Test steps to predict (168 = one week of hours).
    pub eval_horizon: usize,
    pub samples: usize,
    pub quantiles: Vec<f64>,
    pub trials: usize,
    /// Evaluate as 7 successive 24-step rollouts conditioned on true
    /// history instead of one long rollout.
    pub rolling_day: bool,
    pub history_cap: usize,
    pub seed: u64,
}

impl EvalProtocol {
    pub fn validate(&self) -> Result<()> {
        if self.eval_horizon == 0 || self.samples == 0 || self.trials == 0 {
            return Err(CoreError::InvalidConfig(
                "eval horizon, samples and trials must be positive".into(),
            ));
        }
        if self.quantiles.is_empty() {
            return Err(CoreError::InvalidConfig("empty quantile list".into()));
        }
        if self.quantiles.iter().any(|r| !(0.0..1.0).contains(r) || *r == 0.0) {
            return Err(CoreError::InvalidConfig(
                "quantiles must lie strictly inside (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Evaluates trained parameters: predicts the test range per instance,
/// takes empirical quantiles, and aggregates `QL_rho` jointly across all
/// instances and steps (single denominator). Returns `(rho, QL)` pairs.
pub fn evaluate_forecast<T: Scalar>(
    params: &ModelParams<T>,
    model_cfg: &ModelConfig,
    history: &SeriesSet<T>,
    test: &SeriesSet<T>,
    proto: &EvalProtocol,
    scaler: ScalerKind,
    scale_width: usize,
    eval_seed: u64,
) -> Result<Vec<(f64, f64)>> {
    proto.validate()?;
    if history.k() != test.k() {
        return Err(CoreError::InvalidInput(format!(
            "history has {} instances, test has {}",
            history.k(),
            test.k()
        )));
    }
    let horizon = proto.eval_horizon;
    for (i, t) in test.instances.iter().enumerate() {
        if t.len() < horizon {
            return Err(CoreError::HistoryTooShort {
                instance: i,
                required: horizon,
                got: t.len(),
            });
        }
    }
    let mut accums: Vec<QlAccumulator> =
        proto.quantiles.iter().map(|&r| QlAccumulator::new(r)).collect();
    for i in 0..history.k() {
        let targets = &test.instances[i].values[..horizon];
        let quantile_paths: Vec<Vec<T>> = if proto.rolling_day {
            rolling_day_quantiles(
                params, model_cfg, history, test, i, proto, scaler, scale_width, eval_seed,
            )?
        } else {
            let request = ForecastRequest {
                instance: i,
                horizon,
                samples: proto.samples,
                noise: true,
                history_cap: proto.history_cap,
            };
            let traj = predict_samples(
                params,
                model_cfg,
                history,
                &request,
                scaler,
                scale_width,
                child_seed(eval_seed, "instance", i as u64),
            )?;
            proto
                .quantiles
                .iter()
                .map(|&rho| empirical_quantile(&traj, rho))
                .collect()
        };
        for (acc, zhat) in accums.iter_mut().zip(&quantile_paths) {
            acc.add_series(targets, zhat);
        }
    }
    proto
        .quantiles
        .iter()
        .zip(&accums)
        .map(|(&rho, acc)| Ok((rho, acc.value()?)))
        .collect()
}

/// Day-by-day variant: each 24-step day is predicted from the true
/// history up to that day.
#[allow(clippy::too_many_arguments)]
fn rolling_day_quantiles<T: Scalar>(
    params: &ModelParams<T>,
    model_cfg: &ModelConfig,
    history: &SeriesSet<T>,
    test: &SeriesSet<T>,
    instance: usize,
    proto: &EvalProtocol,
    scaler: ScalerKind,
    scale_width: usize,
    eval_seed: u64,
) -> Result<Vec<Vec<T>>> {
    let day = 24usize;
    let horizon = proto.eval_horizon;
    let mut paths: Vec<Vec<T>> = vec![Vec::with_capacity(horizon); proto.quantiles.len()];
    let mut offset = 0usize;
    while offset < horizon {
        let step = day.min(horizon - offset);
        let mut inst = history.instances[instance].clone();
        inst.values
            .extend_from_slice(&test.instances[instance].values[..offset]);
        let extended = SeriesSet {
            instances: vec![inst],
        };
        let request = ForecastRequest {
            instance: 0,
            horizon: step,
            samples: proto.samples,
            noise: true,
            history_cap: proto.history_cap,
        };
        let traj = predict_samples(
            params,
            model_cfg,
            &extended,
            &request,
            scaler,
            scale_width,
            child_seed(eval_seed, "rolling-day", (instance * 1000 + offset) as u64),
        )?;
        for (path, &rho) in paths.iter_mut().zip(&proto.quantiles) {
            path.extend(empirical_quantile(&traj, rho));
        }
        offset += step;
    }
    Ok(paths)
}

fn slice_by_protocol<T: Scalar>(
    series: &SeriesSet<T>,
    proto: &EvalProtocol,
) -> Result<(SeriesSet<T>, SeriesSet<T>)> {
    let step = series
        .instances
        .first()
        .map(|i| i.step_seconds)
        .ok_or_else(|| CoreError::InvalidInput("empty dataset".into()))?;
    let hours_per_week = 168i64;
    let train_start = proto.forecast_start
        - Duration::seconds(step as i64 * hours_per_week * proto.train_weeks as i64);
    let test_end =
        proto.forecast_start + Duration::seconds(step as i64 * proto.eval_horizon as i64);
    let history = series.slice_time(train_start, proto.forecast_start)?;
    let test = series.slice_time(proto.forecast_start, test_end)?;
    Ok((history, test))
}

/// Trains `trials` models (one per seed) on the weeks before the forecast
/// start and scores each on the test week.
pub fn evaluate_benchmark<T: Scalar>(
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    series: &SeriesSet<T>,
    proto: &EvalProtocol,
) -> Result<ForecastReport> {
    proto.validate()?;
    let (history, test) = slice_by_protocol(series, proto)?;
    run_trials(model_cfg, train_cfg, &history, &test, proto)
}

/// Trials with pre-sliced history/test ranges.
pub fn run_trials<T: Scalar>(
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    history: &SeriesSet<T>,
    test: &SeriesSet<T>,
    proto: &EvalProtocol,
) -> Result<ForecastReport> {
    let mut trials = Vec::with_capacity(proto.trials);
    for trial in 0..proto.trials {
        let seed = child_seed(proto.seed, "trial", trial as u64);
        let mut cfg = train_cfg.clone();
        cfg.seed = seed;
        let fitted = fit(model_cfg, &cfg, history)?;
        let ql = evaluate_forecast(
            &fitted.params,
            model_cfg,
            history,
            test,
            proto,
            cfg.scaler,
            cfg.scale_width,
            child_seed(seed, "eval", 0),
        )?;
        trials.push(TrialQl { trial, seed, ql });
    }
    Ok(ForecastReport {
        dataset: proto.dataset.clone(),
        range_label: format!("{}w", proto.train_weeks),
        mode: train_cfg.sampler,
        quantiles: proto.quantiles.clone(),
        trials,
    })
}

/// Trains vanilla (zero-padded), fixed and augmented under identical
/// budgets and per-trial seeds; one report per mode.
pub fn compare_samplers<T: Scalar>(
    series: &SeriesSet<T>,
    model_cfg: &ModelConfig,
    train_cfg: &TrainConfig,
    proto: &EvalProtocol,
) -> Result<Vec<ForecastReport>> {
    let mut reports = Vec::new();
    for mode in [SamplerMode::Vanilla, SamplerMode::Fixed, SamplerMode::Augmented] {
        let mut cfg = train_cfg.clone();
        cfg.sampler = mode;
        reports.push(evaluate_benchmark(model_cfg, &cfg, series, proto)?);
    }
    Ok(reports)
}

/// Long-seasonality study configuration.
#[derive(Clone, Debug)]
pub struct SeasonalityConfig {
    /// Seasonality period in hours; the interesting case has
    /// `period > window_len`.
    pub period: usize,
    /// Training window size (context + 24-step horizon).
    pub window_len: usize,
    pub trials: usize,
    pub instances: usize,
    pub noise_sd: f64,
    pub eval_horizon: usize,
    pub samples: usize,
    pub seed: u64,
    pub max_epochs: usize,
}

impl Default for SeasonalityConfig {
    fn default() -> Self {
        SeasonalityConfig {
            period: 336,
            window_len: 192,
            trials: 3,
            instances: 20,
            noise_sd: 0.5,
            eval_horizon: 48,
            samples: 100,
            seed: 1,
            max_epochs: 12,
        }
    }
}

/// Reports for one seasonality condition.
#[derive(Clone, Debug)]
pub struct SeasonalityOutcome {
    pub label: String,
    pub period: usize,
    pub reports: Vec<ForecastReport>,
}

fn bench_model(instances: usize) -> ModelConfig {
    ModelConfig {
        heads: 4,
        d_k: 8,
        d_v: 8,
        ff_dim: 32,
        embed_dim: 5,
        blocks: 2,
        dropout: 0.1,
        covariate_dim: 2,
        num_instances: instances,
        use_causal_mask: true,
        use_residual_layernorm: true,
    }
}

/// Generates noisy sinusoids and runs the sampler ablation twice: once at
/// the requested period (longer than the window) and once at a control
/// period that fits inside the window.
pub fn seasonality_benchmark<T: Scalar>(cfg: &SeasonalityConfig) -> Result<Vec<SeasonalityOutcome>> {
    if cfg.window_len <= 24 {
        return Err(CoreError::InvalidConfig(
            "window must exceed the 24-step horizon".into(),
        ));
    }
    let control_period = cfg.window_len - 24;
    let train_len = (cfg.period * 5 / 2).max(3 * cfg.window_len);
    let total_len = train_len + cfg.eval_horizon;
    let mut outcomes = Vec::new();
    for (label, period) in [("long", cfg.period), ("control", control_period)] {
        let series = seasonal_series::<T>(
            cfg.instances,
            total_len,
            period,
            cfg.noise_sd,
            child_seed(cfg.seed, "seasonal-data", period as u64),
        );
        let start = series.instances[0].start;
        let forecast_start = series.instances[0].timestamp_at(train_len);
        let _ = start;
        let history = series.slice_time(series.instances[0].start, forecast_start)?;
        let test = series.slice_time(
            forecast_start,
            series.instances[0].timestamp_at(total_len),
        )?;
        let model_cfg = bench_model(cfg.instances);
        let train_cfg = TrainConfig {
            max_epochs: cfg.max_epochs,
            window: SamplerConfig {
                context_len: cfg.window_len - 24,
                horizon_len: 24,
                big_window: 2 * cfg.window_len,
            },
            ..TrainConfig::default()
        };
        let proto = EvalProtocol {
            dataset: format!("sinusoid-p{period}"),
            train_weeks: train_len / 168,
            forecast_start,
            eval_horizon: cfg.eval_horizon,
            samples: cfg.samples,
            quantiles: vec![0.5, 0.9],
            trials: cfg.trials,
            rolling_day: false,
            history_cap: 0,
            seed: cfg.seed,
        };
        let mut reports = Vec::new();
        for mode in [SamplerMode::Vanilla, SamplerMode::Fixed, SamplerMode::Augmented] {
            let mut tc = train_cfg.clone();
            tc.sampler = mode;
            reports.push(run_trials(&model_cfg, &tc, &history, &test, &proto)?);
        }
        outcomes.push(SeasonalityOutcome {
            label: label.into(),
            period,
            reports,
        });
    }
    Ok(outcomes)
}

/// Seasonal-naive baseline: repeats the last observed period.
pub fn seasonal_naive_forecast<T: Scalar>(history: &[T], period: usize, horizon: usize) -> Vec<T> {
    debug_assert!(history.len() >= period);
    (0..horizon)
        .map(|h| history[history.len() - period + (h % period)])
        .collect()
}
