//! Epoch loop, early stopping and the fit driver.

use std::collections::HashSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{
    build_batch_padded, make_covariates, validation_split, Batch, CovariateMatrix, SamplerConfig,
    SamplerMode, ScalerKind, SeriesSet, WindowSampler, WindowSpec,
};
use crate::error::{CoreError, Result};
use crate::kernel::AdamHyper;
use crate::model::{backward, forward, forward_eval, ForwardMode, ModelConfig, ModelParams};
use crate::rng::stream;
use crate::scalar::Scalar;

use super::loss::{nll_loss, nll_loss_backward, scope_mask, LossScope};
use super::optimizer::ModelOptimizer;

const GRAD_CHUNKS: usize = 8;

/// Training-loop configuration. Defaults are the recorded desk-scale
/// settings used by the benchmark protocols.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub sampler: SamplerMode,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Per-epoch window budget for augmented mode; 0 means "match the
    /// vanilla rolling-grid count" so all modes train on equal budgets.
    pub windows_per_epoch: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub grad_clip: f64,
    pub validation_fraction: f64,
    pub loss_scope: LossScope,
    pub seed: u64,
    pub window: SamplerConfig,
    pub scaler: ScalerKind,
    pub scale_width: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            sampler: SamplerMode::Augmented,
            batch_size: 64,
            max_epochs: 15,
            windows_per_epoch: 0,
            patience: 3,
            learning_rate: 1e-3,
            grad_clip: 10.0,
            validation_fraction: 0.10,
            loss_scope: LossScope::HorizonOnly,
            seed: 1,
            window: SamplerConfig::default(),
            scaler: ScalerKind::OnePlusMean,
            scale_width: 192,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(CoreError::InvalidConfig(
                "batch_size, max_epochs and patience must be positive".into(),
            ));
        }
        if self.learning_rate < 0.0 {
            return Err(CoreError::InvalidConfig("negative learning rate".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) || self.validation_fraction == 0.0 {
            return Err(CoreError::InvalidConfig(
                "validation fraction must be in (0, 1)".into(),
            ));
        }
        self.window.validate()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_nll: f64,
    pub val_nll: f64,
    pub wall_ms: u64,
    pub windows: usize,
    /// Distinct window specs seen since training started.
    pub distinct_windows: u64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
}

pub struct FitResult<T> {
    pub params: ModelParams<T>,
    pub log: TrainLog,
    pub best_epoch: usize,
    pub best_val: f64,
}

/// Owns parameters, optimizer state and the sampling plan for one run.
pub struct Trainer<T> {
    pub params: ModelParams<T>,
    model_cfg: ModelConfig,
    cfg: TrainConfig,
    optimizer: ModelOptimizer<T>,
    sampler: WindowSampler,
    /// Series as indexed by specs (zero-padded for vanilla mode).
    series: SeriesSet<T>,
    covariates: Vec<CovariateMatrix<T>>,
    /// Frozen training pool for vanilla/fixed (already budget-sized).
    train_pool: Vec<WindowSpec>,
    val_batch: Batch<T>,
    train_budget: usize,
    epoch: usize,
    seen: HashSet<u64>,
}

impl<T: Scalar> Trainer<T> {
    pub fn new(model_cfg: &ModelConfig, cfg: &TrainConfig, series: &SeriesSet<T>) -> Result<Self> {
        model_cfg.validate()?;
        cfg.validate()?;
        series.validate()?;
        if series.k() != model_cfg.num_instances {
            return Err(CoreError::InvalidConfig(format!(
                "model expects {} instances, dataset has {}",
                model_cfg.num_instances,
                series.k()
            )));
        }
        let real_lens: Vec<usize> = series.instances.iter().map(|i| i.len()).collect();
        let sampler = WindowSampler::new(
            cfg.sampler,
            &real_lens,
            cfg.window,
            crate::rng::child_seed(cfg.seed, "sampler", 0),
        )?;
        let series_indexed = if sampler.pad() > 0 {
            series.zero_pad(sampler.pad())
        } else {
            series.clone()
        };
        let covariates: Vec<CovariateMatrix<T>> = series_indexed
            .instances
            .iter()
            .map(|i| make_covariates(i.start, i.len(), i.step_seconds))
            .collect();

        let budget = if cfg.windows_per_epoch > 0 && cfg.sampler == SamplerMode::Augmented {
            cfg.windows_per_epoch
        } else {
            sampler.budget()
        };
        let val_target = ((cfg.validation_fraction * budget as f64).round() as usize)
            .clamp(1, budget.saturating_sub(1).max(1));
        let train_budget = budget - val_target;

        let mut split_rng = stream(cfg.seed, "val-split", 0);
        let base = sampler.base_specs();
        let (train_pool, val_specs) = match cfg.sampler {
            SamplerMode::Vanilla => {
                let (tr, va) = validation_split(base, cfg.validation_fraction, &mut split_rng)?;
                (tr, va)
            }
            SamplerMode::Fixed => {
                // split the distinct tasks, then cycle the training share
                // up to the common budget
                let (tr, va) = validation_split(base, cfg.validation_fraction, &mut split_rng)?;
                let cycled: Vec<WindowSpec> = tr.iter().cloned().cycle().take(train_budget).collect();
                (cycled, va)
            }
            SamplerMode::Augmented => {
                let (_, va) = validation_split(base, cfg.validation_fraction, &mut split_rng)?;
                (Vec::new(), va)
            }
        };
        let val_batch = build_batch_padded(
            &val_specs,
            &series_indexed,
            &covariates,
            cfg.scaler,
            cfg.scale_width,
            sampler.pad(),
        )?;

        let params = ModelParams::init(model_cfg, cfg.seed)?;
        let optimizer = ModelOptimizer::new(
            &params,
            AdamHyper {
                lr: T::of(cfg.learning_rate),
                ..AdamHyper::default()
            },
            Some(T::of(cfg.grad_clip)),
        );
        Ok(Trainer {
            params,
            model_cfg: model_cfg.clone(),
            cfg: cfg.clone(),
            optimizer,
            sampler,
            series: series_indexed,
            covariates,
            train_pool,
            val_batch,
            train_budget,
            epoch: 0,
            seen: HashSet::new(),
        })
    }

    fn epoch_pool(&self) -> Vec<WindowSpec> {
        let mut pool = match self.cfg.sampler {
            SamplerMode::Vanilla | SamplerMode::Fixed => self.train_pool.clone(),
            SamplerMode::Augmented => {
                let per_instance = self.sampler.per_instance_budgets().to_vec();
                self.sampler.draw(self.epoch as u64 + 1, &per_instance)
            }
        };
        let mut rng = stream(self.cfg.seed, "epoch-order", self.epoch as u64);
        pool.shuffle(&mut rng);
        pool.truncate(self.train_budget);
        pool
    }

    /// Runs one epoch: builds batches, accumulates per-window gradients in
    /// window order (bit-deterministic regardless of thread count), steps
    /// the optimizer, then scores the frozen validation windows.
    pub fn train_epoch(&mut self) -> Result<EpochLog> {
        let start = Instant::now();
        let pool = self.epoch_pool();
        for spec in &pool {
            self.seen.insert(spec.stable_id());
        }
        let mut total_loss = 0.0f64;
        let mut windows = 0usize;
        let mut window_idx = 0u64;
        for chunk in pool.chunks(self.cfg.batch_size) {
            let batch = build_batch_padded(
                chunk,
                &self.series,
                &self.covariates,
                self.cfg.scaler,
                self.cfg.scale_width,
                self.sampler.pad(),
            )?;
            let epoch = self.epoch as u64;
            let seed = self.cfg.seed;
            let model_cfg = &self.model_cfg;
            let params = &self.params;
            let scope = self.cfg.loss_scope;
            // Fixed chunk count (not thread count) so gradient sums are
            // grouped identically no matter how work is scheduled.
            let chunk = batch.windows.len().div_ceil(GRAD_CHUNKS).max(1);
            let results: Result<Vec<(f64, ModelParams<T>)>> = batch
                .windows
                .par_chunks(chunk)
                .enumerate()
                .map(|(ci, ws)| {
                    let mut grads = params.zeros_like();
                    let mut loss_sum = 0.0f64;
                    for (i, w) in ws.iter().enumerate() {
                        let local = window_idx + (ci * chunk + i) as u64;
                        let mut rng = stream(seed, "dropout", (epoch << 32) | local);
                        let (out, cache) =
                            forward(params, model_cfg, w, ForwardMode::Train { rng: &mut rng })?;
                        let mask = scope_mask(w.rows(), w.horizon_rows(), scope);
                        let loss = nll_loss(&out.mu, &out.sigma, &w.targets, &mask)?;
                        let (d_mu, d_sigma) =
                            nll_loss_backward(&out.mu, &out.sigma, &w.targets, &mask);
                        backward(
                            params,
                            model_cfg,
                            w,
                            cache.as_ref().expect("train mode caches"),
                            &d_mu,
                            &d_sigma,
                            &mut grads,
                        )?;
                        loss_sum += loss.to_f64();
                    }
                    Ok((loss_sum, grads))
                })
                .collect();
            let results = results?;
            window_idx += batch.windows.len() as u64;
            let mut iter = results.into_iter();
            let (mut loss_sum, mut grads) = iter.next().expect("non-empty batch");
            for (l, g) in iter {
                loss_sum += l;
                grads.axpy(T::one(), &g)?;
            }
            total_loss += loss_sum;
            grads.scale(T::one() / T::of(batch.windows.len() as f64));
            self.optimizer.step(&mut self.params, &grads)?;
            windows += batch.windows.len();
        }
        let val_nll = self.validation_loss()?;
        let log = EpochLog {
            epoch: self.epoch,
            train_nll: total_loss / windows.max(1) as f64,
            val_nll,
            wall_ms: start.elapsed().as_millis() as u64,
            windows,
            distinct_windows: self.seen.len() as u64,
        };
        self.epoch += 1;
        Ok(log)
    }

    pub fn validation_loss(&self) -> Result<f64> {
        let params = &self.params;
        let cfg = &self.model_cfg;
        let scope = self.cfg.loss_scope;
        let losses: Result<Vec<f64>> = self
            .val_batch
            .windows
            .par_iter()
            .map(|w| {
                let out = forward_eval(params, cfg, w)?;
                let mask = scope_mask(w.rows(), w.horizon_rows(), scope);
                Ok(nll_loss(&out.mu, &out.sigma, &w.targets, &mask)?.to_f64())
            })
            .collect();
        let losses = losses?;
        Ok(losses.iter().sum::<f64>() / losses.len().max(1) as f64)
    }

    pub fn distinct_windows_seen(&self) -> u64 {
        self.seen.len() as u64
    }
}

/// Trains until `max_epochs` or until validation NLL fails to improve for
/// `patience` consecutive epochs; returns the best-validation checkpoint.
pub fn fit<T: Scalar>(
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
    series: &SeriesSet<T>,
) -> Result<FitResult<T>> {
    let mut trainer = Trainer::new(model_cfg, cfg, series)?;
    let mut log = TrainLog::default();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut best_params = trainer.params.clone();
    let mut bad_streak = 0usize;
    for _ in 0..cfg.max_epochs {
        let entry = trainer.train_epoch()?;
        let val = entry.val_nll;
        let epoch = entry.epoch;
        log.epochs.push(entry);
        if val < best_val {
            best_val = val;
            best_epoch = epoch;
            best_params = trainer.params.clone();
            bad_streak = 0;
        } else {
            bad_streak += 1;
            if bad_streak >= cfg.patience {
                break;
            }
        }
    }
    Ok(FitResult {
        params: best_params,
        log,
        best_epoch,
        best_val,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic::seasonal_series;

    fn small_model(k: usize) -> ModelConfig {
        ModelConfig {
            heads: 2,
            d_k: 4,
            d_v: 4,
            ff_dim: 8,
            embed_dim: 3,
            blocks: 1,
            dropout: 0.1,
            covariate_dim: 2,
            num_instances: k,
            use_causal_mask: true,
            use_residual_layernorm: true,
        }
    }

    fn small_train(sampler: SamplerMode, epochs: usize) -> TrainConfig {
        TrainConfig {
            sampler,
            batch_size: 16,
            max_epochs: epochs,
            patience: 30,
            window: SamplerConfig {
                context_len: 24,
                horizon_len: 6,
                big_window: 48,
            },
            scale_width: 48,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_learning_rate_keeps_parameters_and_logs_loss() {
        let series = seasonal_series::<f64>(2, 120, 24, 0.1, 5);
        let mut cfg = small_train(SamplerMode::Vanilla, 1);
        cfg.learning_rate = 0.0;
        let mut trainer = Trainer::new(&small_model(2), &cfg, &series).unwrap();
        let before = trainer.params.clone();
        let log = trainer.train_epoch().unwrap();
        assert_eq!(trainer.params, before);
        assert!(log.train_nll.is_finite());
        assert!(log.windows > 0);
    }

    #[test]
    fn fixed_seed_reproduces_the_training_log() {
        let series = seasonal_series::<f64>(2, 120, 24, 0.1, 6);
        let cfg = small_train(SamplerMode::Augmented, 2);
        let a = fit(&small_model(2), &cfg, &series).unwrap();
        let b = fit(&small_model(2), &cfg, &series).unwrap();
        assert_eq!(a.log.epochs.len(), b.log.epochs.len());
        for (x, y) in a.log.epochs.iter().zip(&b.log.epochs) {
            assert_eq!(x.train_nll.to_bits(), y.train_nll.to_bits());
            assert_eq!(x.val_nll.to_bits(), y.val_nll.to_bits());
        }
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn early_stop_after_patience_exhausted() {
        // patience 1: stops as soon as validation fails to improve once
        let series = seasonal_series::<f64>(2, 120, 24, 0.1, 7);
        let mut cfg = small_train(SamplerMode::Vanilla, 50);
        cfg.patience = 1;
        let result = fit(&small_model(2), &cfg, &series).unwrap();
        let n = result.log.epochs.len();
        assert!(n < 50, "ran {n} epochs");
        // best checkpoint's validation loss is the minimum of the log
        let min = result
            .log
            .epochs
            .iter()
            .map(|e| e.val_nll)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(result.best_val, min);
        // and the epoch right after the best one was not an improvement
        assert!(result.best_epoch + 1 < n || n == 1 || result.best_epoch + 1 == n);
    }

    #[test]
    fn equal_budgets_across_modes() {
        let series = seasonal_series::<f64>(3, 140, 24, 0.1, 8);
        let mut logs = Vec::new();
        for mode in [SamplerMode::Vanilla, SamplerMode::Fixed, SamplerMode::Augmented] {
            let cfg = small_train(mode, 1);
            let mut trainer = Trainer::new(&small_model(3), &cfg, &series).unwrap();
            logs.push(trainer.train_epoch().unwrap().windows);
        }
        assert_eq!(logs[0], logs[1]);
        assert_eq!(logs[1], logs[2]);
    }

    #[test]
    fn augmented_epochs_keep_discovering_new_windows() {
        let series = seasonal_series::<f64>(2, 140, 24, 0.1, 9);
        let cfg = small_train(SamplerMode::Augmented, 3);
        let mut trainer = Trainer::new(&small_model(2), &cfg, &series).unwrap();
        let a = trainer.train_epoch().unwrap().distinct_windows;
        let b = trainer.train_epoch().unwrap().distinct_windows;
        let c = trainer.train_epoch().unwrap().distinct_windows;
        assert!(b > a && c > b, "{a} {b} {c}");

        // vanilla saturates after the first epoch
        let cfg = small_train(SamplerMode::Vanilla, 3);
        let mut trainer = Trainer::new(&small_model(2), &cfg, &series).unwrap();
        let a = trainer.train_epoch().unwrap().distinct_windows;
        let b = trainer.train_epoch().unwrap().distinct_windows;
        assert_eq!(a, b);
    }

    #[test]
    fn horizon_scope_ignores_context_targets() {
        // Under horizon_only, corrupting the targets of context rows
        // changes neither the loss nor any gradient: the head output at
        // context steps carries exactly zero gradient.
        use crate::data::{build_batch, make_covariates, sample_window, ScalerKind};
        let series = seasonal_series::<f64>(1, 120, 24, 0.1, 11);
        let covs: Vec<_> = series
            .instances
            .iter()
            .map(|i| make_covariates(i.start, i.len(), i.step_seconds))
            .collect();
        let mut rng = stream(3, "scope-test", 0);
        let spec =
            sample_window(SamplerMode::Augmented, &mut rng, 0, 120, 24, 6, 48).unwrap();
        let batch = build_batch(&[spec], &series, &covs, ScalerKind::OnePlusMean, 48).unwrap();
        let model = small_model(1);
        let params = ModelParams::<f64>::init(&model, 4).unwrap();

        let eval = |w: &crate::data::WindowData<f64>| {
            let (out, cache) = forward(
                &params,
                &model,
                w,
                ForwardMode::Train {
                    rng: &mut stream(9, "drop", 0),
                },
            )
            .unwrap();
            let mask = scope_mask(w.rows(), w.horizon_rows(), LossScope::HorizonOnly);
            let loss = nll_loss(&out.mu, &out.sigma, &w.targets, &mask).unwrap();
            let (d_mu, d_sigma) = nll_loss_backward(&out.mu, &out.sigma, &w.targets, &mask);
            for r in 0..w.context_len {
                assert_eq!(d_mu[r], 0.0);
                assert_eq!(d_sigma[r], 0.0);
            }
            let mut grads = params.zeros_like();
            backward(&params, &model, w, cache.as_ref().unwrap(), &d_mu, &d_sigma, &mut grads)
                .unwrap();
            (loss, grads)
        };
        let (loss_a, grads_a) = eval(&batch.windows[0]);
        let mut corrupted = batch.windows[0].clone();
        for r in 0..corrupted.context_len {
            corrupted.targets[r] += 1000.0;
        }
        let (loss_b, grads_b) = eval(&corrupted);
        assert_eq!(loss_a.to_bits(), loss_b.to_bits());
        assert_eq!(grads_a, grads_b);
    }
}
