//! Run configuration: a nested TOML document with exhaustive validation
//! and `--section.key value` overrides.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use augcast::data::{SamplerConfig, SamplerMode, ScalerKind};
use augcast::model::{GridSpec, ModelConfig};
use augcast::train::{LossScope, TrainConfig};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    /// Normalized dataset file (generic wide CSV, see `ingest`). Unused
    /// by `compare-samplers --synthetic`.
    #[serde(default)]
    pub dataset: PathBuf,
    #[serde(default)]
    pub scaler: ScalerKind,
    #[serde(default = "default_scale_width")]
    pub scale_width: usize,
    #[serde(default = "default_context")]
    pub context_length: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_big_window")]
    pub big_window: usize,
    /// Keep only the first N instances; 0 keeps all.
    #[serde(default)]
    pub limit_instances: usize,
}

fn default_scale_width() -> usize {
    192
}
fn default_context() -> usize {
    168
}
fn default_horizon() -> usize {
    24
}
fn default_big_window() -> usize {
    384
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub heads: usize,
    pub d_k: usize,
    pub d_v: usize,
    pub ff_dim: usize,
    pub embed_dim: usize,
    pub blocks: usize,
    pub dropout: f64,
    pub causal_mask: bool,
    pub residual_layernorm: bool,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = ModelConfig::default();
        ModelSection {
            heads: m.heads,
            d_k: m.d_k,
            d_v: m.d_v,
            ff_dim: m.ff_dim,
            embed_dim: m.embed_dim,
            blocks: m.blocks,
            dropout: m.dropout,
            causal_mask: m.use_causal_mask,
            residual_layernorm: m.use_residual_layernorm,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub sampler: String,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub windows_per_epoch: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub grad_clip: f64,
    pub validation_fraction: f64,
    pub loss_scope: String,
    pub seed: u64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            sampler: t.sampler.to_string(),
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            windows_per_epoch: t.windows_per_epoch,
            patience: t.patience,
            learning_rate: t.learning_rate,
            grad_clip: t.grad_clip,
            validation_fraction: t.validation_fraction,
            loss_scope: "horizon_only".into(),
            seed: t.seed,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    /// ISO timestamp, e.g. "2014-09-01T00:00:00".
    pub forecast_start: String,
    #[serde(default = "default_weeks")]
    pub train_weeks: usize,
    #[serde(default = "default_eval_horizon")]
    pub horizon: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_quantiles")]
    pub quantiles: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub rolling_day: bool,
    #[serde(default)]
    pub history_cap: usize,
}

fn default_weeks() -> usize {
    2
}
fn default_eval_horizon() -> usize {
    168
}
fn default_samples() -> usize {
    100
}
fn default_quantiles() -> Vec<f64> {
    vec![0.5, 0.9]
}
fn default_trials() -> usize {
    3
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub d_k_d_v: Vec<usize>,
    pub ff_dim: Vec<usize>,
    pub embed_dim: Vec<usize>,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = GridSpec::default();
        GridSection {
            d_k_d_v: g.d_k_d_v,
            ff_dim: g.ff_dim,
            embed_dim: g.embed_dim,
        }
    }
}

/// The whole run configuration document.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub eval: Option<EvalSection>,
    #[serde(default)]
    pub grid: GridSection,
}

impl RunConfig {
    /// Parses the TOML file and applies `--section.key value` overrides.
    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut value: toml::Value = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        for (key, raw) in overrides {
            apply_override(&mut value, key, raw)?;
        }
        let cfg: RunConfig = value
            .try_into()
            .map_err(|e| anyhow!("invalid configuration: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.data.context_length == 0 || self.data.horizon == 0 {
            problems.push("data.context_length and data.horizon must be positive".to_string());
        }
        if self.data.big_window < self.data.context_length + self.data.horizon {
            problems.push(format!(
                "data.big_window {} smaller than window {}",
                self.data.big_window,
                self.data.context_length + self.data.horizon
            ));
        }
        if self.data.scale_width == 0 {
            problems.push("data.scale_width must be positive".into());
        }
        if SamplerMode::from_str(&self.train.sampler).is_err() {
            problems.push(format!("train.sampler '{}' unknown", self.train.sampler));
        }
        if !matches!(self.train.loss_scope.as_str(), "horizon_only" | "all_steps") {
            problems.push(format!(
                "train.loss_scope '{}' unknown (horizon_only|all_steps)",
                self.train.loss_scope
            ));
        }
        if let Some(eval) = &self.eval {
            if parse_timestamp(&eval.forecast_start).is_none() {
                problems.push(format!(
                    "eval.forecast_start '{}' is not an ISO timestamp",
                    eval.forecast_start
                ));
            }
            if eval.quantiles.is_empty() {
                problems.push("eval.quantiles must not be empty".into());
            }
            if eval.quantiles.iter().any(|q| !(0.0 < *q && *q < 1.0)) {
                problems.push("eval.quantiles must lie in (0, 1)".into());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            bail!("configuration invalid:\n  {}", problems.join("\n  "))
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn model_config(&self, num_instances: usize) -> ModelConfig {
        ModelConfig {
            heads: self.model.heads,
            d_k: self.model.d_k,
            d_v: self.model.d_v,
            ff_dim: self.model.ff_dim,
            embed_dim: self.model.embed_dim,
            blocks: self.model.blocks,
            dropout: self.model.dropout,
            covariate_dim: augcast::data::CALENDAR_DIM,
            num_instances,
            use_causal_mask: self.model.causal_mask,
            use_residual_layernorm: self.model.residual_layernorm,
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        Ok(TrainConfig {
            sampler: SamplerMode::from_str(&self.train.sampler)?,
            batch_size: self.train.batch_size,
            max_epochs: self.train.max_epochs,
            windows_per_epoch: self.train.windows_per_epoch,
            patience: self.train.patience,
            learning_rate: self.train.learning_rate,
            grad_clip: self.train.grad_clip,
            validation_fraction: self.train.validation_fraction,
            loss_scope: if self.train.loss_scope == "all_steps" {
                LossScope::AllSteps
            } else {
                LossScope::HorizonOnly
            },
            seed: self.train.seed,
            window: SamplerConfig {
                context_len: self.data.context_length,
                horizon_len: self.data.horizon,
                big_window: self.data.big_window,
            },
            scaler: self.data.scaler,
            scale_width: self.data.scale_width,
        })
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            d_k_d_v: self.grid.d_k_d_v.clone(),
            ff_dim: self.grid.ff_dim.clone(),
            embed_dim: self.grid.embed_dim.clone(),
        }
    }
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S"))
        .ok()
}

/// Sets `section.key = value` inside the TOML tree, guessing the value
/// type (bool, integer, float, list, string — in that order).
fn apply_override(root: &mut toml::Value, dotted: &str, raw: &str) -> Result<()> {
    let mut parts = dotted.split('.').collect::<Vec<_>>();
    if parts.len() < 2 {
        // top-level shorthands map onto their canonical section
        let mapped: &[(&str, &str)] = &[
            ("seed", "train.seed"),
            ("sampler", "train.sampler"),
            ("weeks", "eval.train_weeks"),
            ("rho", "eval.quantiles"),
            ("trials", "eval.trials"),
        ];
        match mapped.iter().find(|(k, _)| *k == dotted) {
            Some((_, canonical)) => {
                parts = canonical.split('.').collect();
            }
            None => bail!("unknown override --{dotted} (expected --section.key)"),
        }
    }
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| anyhow!("--{dotted}: '{part}' is not a section"))?;
        node = table
            .entry((*part).to_string())
            .or_insert(toml::Value::Table(Default::default()));
    }
    let leaf = parts.last().unwrap();
    let table = node
        .as_table_mut()
        .ok_or_else(|| anyhow!("--{dotted}: parent is not a section"))?;
    table.insert((*leaf).to_string(), guess_value(raw));
    Ok(())
}

fn guess_value(raw: &str) -> toml::Value {
    if let Ok(b) = raw.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    if raw.contains(',') {
        let items: Vec<toml::Value> = raw.split(',').map(|s| guess_value(s.trim())).collect();
        return toml::Value::Array(items);
    }
    toml::Value::String(raw.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_cfg(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let f = write_cfg("[data]\ndataset = \"d.csv\"\n");
        let cfg = RunConfig::load(f.path(), &[]).unwrap();
        assert_eq!(cfg.model.heads, 8);
        assert_eq!(cfg.train.batch_size, 64);
        assert!(cfg.eval.is_none());
        assert_eq!(cfg.data.context_length, 168);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let f = write_cfg("[data]\ndataset = \"d.csv\"\nbogus = 1\n");
        let err = RunConfig::load(f.path(), &[]).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn dataset_defaults_to_empty_until_a_command_needs_it() {
        // commands that read data report the missing key themselves
        let f = write_cfg("[data]\nscale_width = 192\n");
        let cfg = RunConfig::load(f.path(), &[]).unwrap();
        assert!(cfg.data.dataset.as_os_str().is_empty());
    }

    #[test]
    fn overrides_set_nested_keys_and_shorthands() {
        let f = write_cfg(
            "[data]\ndataset = \"d.csv\"\n[eval]\nforecast_start = \"2014-09-01T00:00:00\"\n",
        );
        let overrides = vec![
            ("data.scale_width".to_string(), "96".to_string()),
            ("seed".to_string(), "7".to_string()),
            ("sampler".to_string(), "fixed".to_string()),
            ("weeks".to_string(), "3".to_string()),
            ("rho".to_string(), "0.5,0.9".to_string()),
            ("model.dropout".to_string(), "0.0".to_string()),
        ];
        let cfg = RunConfig::load(f.path(), &overrides).unwrap();
        assert_eq!(cfg.data.scale_width, 96);
        assert_eq!(cfg.train.seed, 7);
        assert_eq!(cfg.train.sampler, "fixed");
        let eval = cfg.eval.unwrap();
        assert_eq!(eval.train_weeks, 3);
        assert_eq!(eval.quantiles, vec![0.5, 0.9]);
        assert_eq!(cfg.model.dropout, 0.0);
    }

    #[test]
    fn invalid_values_enumerate_all_violations() {
        let f = write_cfg(
            "[data]\ndataset = \"d.csv\"\nbig_window = 10\nscale_width = 0\n[train]\nsampler = \"nope\"\n",
        );
        let err = RunConfig::load(f.path(), &[]).unwrap_err().to_string();
        assert!(err.contains("big_window"), "{err}");
        assert!(err.contains("scale_width"), "{err}");
        assert!(err.contains("sampler"), "{err}");
    }

    #[test]
    fn empty_quantiles_fail_validation() {
        let f = write_cfg(
            "[data]\ndataset = \"d.csv\"\n[eval]\nforecast_start = \"2014-09-01T00:00:00\"\nquantiles = []\n",
        );
        let err = RunConfig::load(f.path(), &[]).unwrap_err();
        assert!(err.to_string().contains("quantiles"), "{err}");
    }

    #[test]
    fn resolved_config_round_trips_through_toml() {
        let f = write_cfg(
            "[data]\ndataset = \"d.csv\"\n[eval]\nforecast_start = \"2014-09-01T00:00:00\"\n",
        );
        let cfg = RunConfig::load(f.path(), &[]).unwrap();
        let text = cfg.to_toml().unwrap();
        let again: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(again.data.dataset, cfg.data.dataset);
        assert_eq!(again.train.seed, cfg.train.seed);
    }
}
