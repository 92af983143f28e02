//! Architecture hyperparameters.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Decoder hyperparameters. `input_dim = 1 + covariate_dim + embed_dim`;
/// block width after the first attention layer is `heads * d_v`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub heads: usize,
    pub d_k: usize,
    pub d_v: usize,
    pub ff_dim: usize,
    pub embed_dim: usize,
    pub blocks: usize,
    pub dropout: f64,
    pub covariate_dim: usize,
    pub num_instances: usize,
    pub use_causal_mask: bool,
    pub use_residual_layernorm: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            heads: 8,
            d_k: 10,
            d_v: 10,
            ff_dim: 40,
            embed_dim: 10,
            blocks: 3,
            dropout: 0.1,
            covariate_dim: 2,
            num_instances: 1,
            use_causal_mask: true,
            use_residual_layernorm: true,
        }
    }
}

impl ModelConfig {
    pub fn input_dim(&self) -> usize {
        1 + self.covariate_dim + self.embed_dim
    }

    /// Width of every block output (`H * d_v`).
    pub fn width(&self) -> usize {
        self.heads * self.d_v
    }

    /// Input width of block `index` (0-based): the raw input dim for the
    /// first block, the concatenated head width afterwards.
    pub fn block_input_dim(&self, index: usize) -> usize {
        if index == 0 {
            self.input_dim()
        } else {
            self.width()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.heads,
            self.d_k,
            self.d_v,
            self.ff_dim,
            self.embed_dim,
            self.blocks,
            self.num_instances,
        ];
        if dims.iter().any(|&d| d == 0) {
            return Err(CoreError::InvalidConfig(
                "all model dimensions must be at least 1".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(CoreError::InvalidConfig(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }
}

/// Exact count of learnable scalars for a config.
pub fn num_params(cfg: &ModelConfig) -> usize {
    let w = cfg.width();
    let mut total = cfg.num_instances * cfg.embed_dim; // embedding table
    for b in 0..cfg.blocks {
        let w_in = cfg.block_input_dim(b);
        total += cfg.heads * (w_in * cfg.d_k * 2 + w_in * cfg.d_v); // QKV
        total += w * w + w; // output projection
        total += w * cfg.ff_dim + cfg.ff_dim + cfg.ff_dim * w + w; // feedforward
        if cfg.use_residual_layernorm {
            total += 4 * w; // two layer norms
        }
    }
    total += w * 2 + 2; // Gaussian head
    total
}

/// Hyperparameter grid; defaults follow the reported search space
/// (`d_k = d_v` in {10, 20}, feedforward in {20..60}, embedding in
/// {5, 10, 20}).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridSpec {
    pub d_k_d_v: Vec<usize>,
    pub ff_dim: Vec<usize>,
    pub embed_dim: Vec<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            d_k_d_v: vec![10, 20],
            ff_dim: vec![20, 30, 40, 50, 60],
            embed_dim: vec![5, 10, 20],
        }
    }
}

/// Exhaustive product of the grid applied onto a base config.
pub fn grid_candidates(base: &ModelConfig, grid: &GridSpec) -> Vec<ModelConfig> {
    let mut out = Vec::new();
    for &d in &grid.d_k_d_v {
        for &ff in &grid.ff_dim {
            for &e in &grid.embed_dim {
                let mut cfg = base.clone();
                cfg.d_k = d;
                cfg.d_v = d;
                cfg.ff_dim = ff;
                cfg.embed_dim = e;
                out.push(cfg);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_only_parameter_count() {
        let cfg = ModelConfig {
            num_instances: 10,
            embed_dim: 5,
            ..ModelConfig::default()
        };
        // k * E contribution
        assert!(num_params(&cfg) >= 50);
        let smaller = ModelConfig {
            num_instances: 1,
            embed_dim: 5,
            ..ModelConfig::default()
        };
        assert_eq!(num_params(&cfg) - num_params(&smaller), 45);
    }

    #[test]
    fn first_block_qkv_count_matches_shape_arithmetic() {
        // H=8, d_k=d_v=10, input_dim=8 -> 8*(8*10 + 8*10 + 8*10) = 1920
        let cfg = ModelConfig {
            heads: 8,
            d_k: 10,
            d_v: 10,
            embed_dim: 5,
            covariate_dim: 2,
            ..ModelConfig::default()
        };
        assert_eq!(cfg.input_dim(), 8);
        let qkv_first = cfg.heads * (cfg.input_dim() * cfg.d_k * 2 + cfg.input_dim() * cfg.d_v);
        assert_eq!(qkv_first, 1920);
    }

    #[test]
    fn doubling_blocks_doubles_block_parameters() {
        let one = ModelConfig {
            blocks: 1,
            ..ModelConfig::default()
        };
        let three = ModelConfig {
            blocks: 3,
            ..ModelConfig::default()
        };
        let head_and_emb = one.width() * 2 + 2 + one.num_instances * one.embed_dim;
        let per_block_first = num_params(&one) - head_and_emb;
        let later_two = num_params(&three) - num_params(&one);
        // later blocks are wider on the QKV input side, never smaller
        assert!(later_two >= 2 * per_block_first - 2 * one.heads * one.input_dim() * 30);
        assert_eq!(later_two % 2, 0);
    }

    #[test]
    fn default_grid_has_thirty_candidates() {
        let got = grid_candidates(&ModelConfig::default(), &GridSpec::default());
        assert_eq!(got.len(), 30);
        let singleton = GridSpec {
            d_k_d_v: vec![10],
            ff_dim: vec![40],
            embed_dim: vec![10],
        };
        assert_eq!(grid_candidates(&ModelConfig::default(), &singleton).len(), 1);
    }
}
