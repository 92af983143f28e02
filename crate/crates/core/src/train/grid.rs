//! Exhaustive hyperparameter grid search ranked by validation loss.

use serde::{Deserialize, Serialize};

use crate::data::SeriesSet;
use crate::error::Result;
use crate::model::{grid_candidates, GridSpec, ModelConfig};
use crate::scalar::Scalar;

use super::trainer::{fit, FitResult, TrainConfig};

/// One leaderboard entry.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridRow {
    pub index: usize,
    pub d_k: usize,
    pub d_v: usize,
    pub ff_dim: usize,
    pub embed_dim: usize,
    pub val_nll: f64,
    pub epochs: usize,
    pub best_epoch: usize,
}

pub struct GridOutcome<T> {
    /// Rows actually run, sorted ascending by validation loss.
    pub leaderboard: Vec<GridRow>,
    pub best: Option<(ModelConfig, FitResult<T>)>,
}

/// Fits every candidate in the grid product (same seed for all, so ranks
/// compare like for like). `skip` suppresses already-completed indices so
/// interrupted searches can resume; `on_result` fires after each fit.
pub fn grid_search<T: Scalar>(
    base: &ModelConfig,
    grid: &GridSpec,
    train_cfg: &TrainConfig,
    series: &SeriesSet<T>,
    skip: &dyn Fn(usize) -> bool,
    on_result: &mut dyn FnMut(&GridRow),
) -> Result<GridOutcome<T>> {
    let candidates = grid_candidates(base, grid);
    let mut leaderboard = Vec::new();
    let mut best: Option<(ModelConfig, FitResult<T>)> = None;
    for (index, cfg) in candidates.into_iter().enumerate() {
        if skip(index) {
            continue;
        }
        let result = fit(&cfg, train_cfg, series)?;
        let row = GridRow {
            index,
            d_k: cfg.d_k,
            d_v: cfg.d_v,
            ff_dim: cfg.ff_dim,
            embed_dim: cfg.embed_dim,
            val_nll: result.best_val,
            epochs: result.log.epochs.len(),
            best_epoch: result.best_epoch,
        };
        on_result(&row);
        let better = best
            .as_ref()
            .map_or(true, |(_, b)| result.best_val < b.best_val);
        if better {
            best = Some((cfg, result));
        }
        leaderboard.push(row);
    }
    leaderboard.sort_by(|a, b| a.val_nll.total_cmp(&b.val_nll));
    Ok(GridOutcome { leaderboard, best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic::seasonal_series;
    use crate::data::{SamplerConfig, SamplerMode};

    fn tiny_train() -> TrainConfig {
        TrainConfig {
            sampler: SamplerMode::Vanilla,
            batch_size: 16,
            max_epochs: 1,
            patience: 1,
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
    fn singleton_grid_returns_that_config() {
        let series = seasonal_series::<f64>(2, 90, 24, 0.1, 3);
        let base = ModelConfig {
            heads: 2,
            blocks: 1,
            num_instances: 2,
            ..ModelConfig::default()
        };
        let grid = GridSpec {
            d_k_d_v: vec![4],
            ff_dim: vec![8],
            embed_dim: vec![3],
        };
        let mut seen = 0;
        let out = grid_search(&base, &grid, &tiny_train(), &series, &|_| false, &mut |_| {
            seen += 1;
        })
        .unwrap();
        assert_eq!(seen, 1);
        assert_eq!(out.leaderboard.len(), 1);
        let (cfg, _) = out.best.unwrap();
        assert_eq!((cfg.d_k, cfg.ff_dim, cfg.embed_dim), (4, 8, 3));
    }

    #[test]
    fn leaderboard_is_sorted_and_skip_resumes() {
        let series = seasonal_series::<f64>(2, 90, 24, 0.1, 4);
        let base = ModelConfig {
            heads: 2,
            blocks: 1,
            num_instances: 2,
            ..ModelConfig::default()
        };
        let grid = GridSpec {
            d_k_d_v: vec![3, 4],
            ff_dim: vec![6],
            embed_dim: vec![2, 3],
        };
        let out = grid_search(&base, &grid, &tiny_train(), &series, &|i| i % 2 == 1, &mut |_| {})
            .unwrap();
        assert_eq!(out.leaderboard.len(), 2);
        for w in out.leaderboard.windows(2) {
            assert!(w[0].val_nll <= w[1].val_nll);
        }
        assert!(out.leaderboard.iter().all(|r| r.index % 2 == 0));
    }
}
