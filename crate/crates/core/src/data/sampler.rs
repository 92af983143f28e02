//! Training-window samplers: consecutive rolling windows (vanilla), random
//! context frozen inside bigger rolling windows (fixed), and fresh random
//! context drawn from the entire observed history (augmented).

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::rng::{stable_hash, stream};

/// The three window-sampling regimes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMode {
    Vanilla,
    Fixed,
    Augmented,
}

impl std::fmt::Display for SamplerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SamplerMode::Vanilla => write!(f, "vanilla"),
            SamplerMode::Fixed => write!(f, "fixed"),
            SamplerMode::Augmented => write!(f, "augmented"),
        }
    }
}

impl std::str::FromStr for SamplerMode {
    type Err = CoreError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(SamplerMode::Vanilla),
            "fixed" => Ok(SamplerMode::Fixed),
            "augmented" => Ok(SamplerMode::Augmented),
            other => Err(CoreError::InvalidConfig(format!(
                "unknown sampler mode '{other}' (expected vanilla|fixed|augmented)"
            ))),
        }
    }
}

/// One training task: context time indices (possibly non-consecutive, in
/// draw order) plus a consecutive forecast horizon.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowSpec {
    pub instance: usize,
    pub context: Vec<usize>,
    pub horizon_start: usize,
    pub horizon_len: usize,
    pub mode: SamplerMode,
}

impl WindowSpec {
    pub fn context_len(&self) -> usize {
        self.context.len()
    }

    pub fn window_len(&self) -> usize {
        self.context.len() + self.horizon_len
    }

    pub fn horizon_indices(&self) -> std::ops::Range<usize> {
        self.horizon_start..self.horizon_start + self.horizon_len
    }

    /// Checks the type invariants against a series of `series_len` steps.
    pub fn validate(&self, series_len: usize, expected_window: usize) -> Result<()> {
        if self.window_len() != expected_window {
            return Err(CoreError::InvalidInput(format!(
                "window spec has {} steps, expected {expected_window}",
                self.window_len()
            )));
        }
        if self.horizon_start + self.horizon_len > series_len {
            return Err(CoreError::IndexOutOfRange {
                what: format!("horizon of spec for instance {}", self.instance),
                index: self.horizon_start + self.horizon_len - 1,
                len: series_len,
            });
        }
        let mut seen = vec![false; self.horizon_start];
        for &c in &self.context {
            if c >= self.horizon_start {
                return Err(CoreError::InvalidInput(format!(
                    "context index {c} not before horizon start {}",
                    self.horizon_start
                )));
            }
            if seen[c] {
                return Err(CoreError::InvalidInput(format!(
                    "duplicate context index {c}"
                )));
            }
            seen[c] = true;
        }
        Ok(())
    }

    /// Stable hash for distinct-window counters.
    pub fn stable_id(&self) -> u64 {
        let mode = match self.mode {
            SamplerMode::Vanilla => 0u64,
            SamplerMode::Fixed => 1,
            SamplerMode::Augmented => 2,
        };
        stable_hash(
            [mode, self.instance as u64, self.horizon_start as u64, self.horizon_len as u64]
                .into_iter()
                .chain(self.context.iter().map(|&c| c as u64)),
        )
    }
}

/// Draws `count` distinct values from `lo..hi` by partial Fisher-Yates;
/// the returned order is the draw order.
fn sample_ordered(rng: &mut impl Rng, lo: usize, hi: usize, count: usize) -> Vec<usize> {
    debug_assert!(hi - lo >= count);
    let mut pool: Vec<usize> = (lo..hi).collect();
    let n = pool.len();
    for i in 0..count {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}

/// Draws one training window at random under the given mode.
///
/// * vanilla — uniform consecutive placement, context immediately before
///   the horizon;
/// * fixed — a big rolling window of length `big_window` ending at a
///   stride-aligned horizon; context drawn without replacement from the
///   part of the big window preceding the horizon;
/// * augmented — horizon start uniform over all valid offsets, context
///   drawn without replacement from the entire history before it.
///
/// Fixed and augmented keep context indices in draw order; temporal order
/// is deliberately broken.
pub fn sample_window(
    mode: SamplerMode,
    rng: &mut impl Rng,
    instance: usize,
    history_len: usize,
    context_len: usize,
    horizon_len: usize,
    big_window: usize,
) -> Result<WindowSpec> {
    let window = context_len + horizon_len;
    if history_len < window {
        return Err(CoreError::HistoryTooShort {
            instance,
            required: window,
            got: history_len,
        });
    }
    match mode {
        SamplerMode::Vanilla => {
            let start = rng.random_range(0..=history_len - window);
            Ok(WindowSpec {
                instance,
                context: (start..start + context_len).collect(),
                horizon_start: start + context_len,
                horizon_len,
                mode,
            })
        }
        SamplerMode::Fixed => {
            if big_window < window {
                return Err(CoreError::InvalidConfig(format!(
                    "big window {big_window} smaller than window {window}"
                )));
            }
            // Big window ends at the end of a horizon placed on the
            // stride-tau grid; its start clips at the series start.
            let grid = eligible_horizons(history_len, context_len, horizon_len, horizon_len);
            let h = grid[rng.random_range(0..grid.len())];
            let bw_start = (h + horizon_len).saturating_sub(big_window);
            Ok(WindowSpec {
                instance,
                context: sample_ordered(rng, bw_start, h, context_len),
                horizon_start: h,
                horizon_len,
                mode,
            })
        }
        SamplerMode::Augmented => {
            let h = rng.random_range(context_len..=history_len - horizon_len);
            Ok(WindowSpec {
                instance,
                context: sample_ordered(rng, 0, h, context_len),
                horizon_start: h,
                horizon_len,
                mode,
            })
        }
    }
}

/// Horizon starts on the stride grid, end-anchored, needing at least
/// `context_len` observed steps before them. Ascending order.
fn eligible_horizons(
    history_len: usize,
    context_len: usize,
    horizon_len: usize,
    stride: usize,
) -> Vec<usize> {
    let mut out = Vec::new();
    if history_len < context_len + horizon_len {
        return out;
    }
    let mut h = history_len - horizon_len;
    loop {
        if h < context_len {
            break;
        }
        out.push(h);
        if h < stride {
            break;
        }
        h -= stride;
    }
    out.reverse();
    out
}

/// Distinct-window counts for a single instance of `history_len` steps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowCount {
    /// Counting unordered context sets.
    pub unordered: BigUint,
    /// Ordered draws: unordered times C! for the sampled modes.
    pub ordered: BigUint,
}

fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let mut acc = BigUint::from(1u32);
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::from(1u32), |acc, i| acc * BigUint::from(i))
}

/// Number of distinct training windows each mode can produce.
///
/// Vanilla placements are linear in the history length; augmented context
/// sets grow combinatorially (`sum over horizon starts h of C(h, context)`).
pub fn count_distinct_windows(
    mode: SamplerMode,
    history_len: usize,
    context_len: usize,
    horizon_len: usize,
    big_window: usize,
) -> WindowCount {
    let window = context_len + horizon_len;
    if history_len < window {
        let zero = BigUint::from(0u32);
        return WindowCount {
            unordered: zero.clone(),
            ordered: zero,
        };
    }
    match mode {
        SamplerMode::Vanilla => {
            let n = BigUint::from(history_len - window + 1);
            WindowCount {
                unordered: n.clone(),
                ordered: n,
            }
        }
        SamplerMode::Fixed => {
            let mut total = BigUint::from(0u32);
            for h in eligible_horizons(history_len, context_len, horizon_len, horizon_len) {
                let bw_start = (h + horizon_len).saturating_sub(big_window);
                total += binomial(h - bw_start, context_len);
            }
            let ordered = total.clone() * factorial(context_len);
            WindowCount {
                unordered: total,
                ordered,
            }
        }
        SamplerMode::Augmented => {
            let mut total = BigUint::from(0u32);
            for h in context_len..=history_len - horizon_len {
                total += binomial(h, context_len);
            }
            let ordered = total.clone() * factorial(context_len);
            WindowCount {
                unordered: total,
                ordered,
            }
        }
    }
}

/// Window geometry shared by all samplers.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub context_len: usize,
    pub horizon_len: usize,
    pub big_window: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            context_len: 168,
            horizon_len: 24,
            big_window: 384,
        }
    }
}

impl SamplerConfig {
    pub fn window_len(&self) -> usize {
        self.context_len + self.horizon_len
    }

    pub fn validate(&self) -> Result<()> {
        if self.context_len == 0 || self.horizon_len == 0 {
            return Err(CoreError::InvalidConfig(
                "context and horizon lengths must be positive".into(),
            ));
        }
        if self.big_window < self.window_len() {
            return Err(CoreError::InvalidConfig(format!(
                "big window {} smaller than window {}",
                self.big_window,
                self.window_len()
            )));
        }
        Ok(())
    }
}

/// Epoch-level window source for one sampler mode.
///
/// All three modes share a per-instance gradient budget equal to the
/// padded vanilla rolling-grid size, so ablations compare equal training
/// effort. Vanilla expects the series zero-padded by `context_len` (its
/// indices refer to the padded series); fixed freezes its random specs at
/// construction so the distinct-task count stays matched to the rolling
/// grid; augmented redraws every epoch.
pub struct WindowSampler {
    mode: SamplerMode,
    cfg: SamplerConfig,
    /// Per-instance length of the series the specs index into (padded for
    /// vanilla).
    indexed_lens: Vec<usize>,
    /// Leading pad per instance (vanilla: context_len, otherwise 0).
    pad: usize,
    /// Per-instance budget: padded rolling-grid count.
    budgets: Vec<usize>,
    frozen: Vec<WindowSpec>,
    seed: u64,
}

impl WindowSampler {
    /// `real_lens` are the unpadded per-instance lengths.
    pub fn new(mode: SamplerMode, real_lens: &[usize], cfg: SamplerConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let window = cfg.window_len();
        let tau = cfg.horizon_len;
        let mut budgets = Vec::with_capacity(real_lens.len());
        for (i, &t) in real_lens.iter().enumerate() {
            if t < window {
                return Err(CoreError::HistoryTooShort {
                    instance: i,
                    required: window,
                    got: t,
                });
            }
            budgets.push((t - tau) / tau + 1);
        }
        let pad = if mode == SamplerMode::Vanilla { cfg.context_len } else { 0 };
        let indexed_lens: Vec<usize> = real_lens.iter().map(|&t| t + pad).collect();
        let mut sampler = WindowSampler {
            mode,
            cfg,
            indexed_lens,
            pad,
            budgets,
            frozen: Vec::new(),
            seed,
        };
        match mode {
            SamplerMode::Vanilla => sampler.frozen = sampler.vanilla_grid(),
            SamplerMode::Fixed => sampler.frozen = sampler.freeze_fixed()?,
            SamplerMode::Augmented => {}
        }
        Ok(sampler)
    }

    pub fn mode(&self) -> SamplerMode {
        self.mode
    }

    /// Leading zero-pad the indexed series carry (vanilla only).
    pub fn pad(&self) -> usize {
        self.pad
    }

    /// Total per-epoch gradient budget (same for every mode).
    pub fn budget(&self) -> usize {
        self.budgets.iter().sum()
    }

    /// Number of distinct frozen tasks (grid size for vanilla, matched
    /// grid count for fixed; unbounded for augmented -> 0).
    pub fn frozen_len(&self) -> usize {
        self.frozen.len()
    }

    fn vanilla_grid(&self) -> Vec<WindowSpec> {
        let mut specs = Vec::new();
        let c = self.cfg.context_len;
        let tau = self.cfg.horizon_len;
        for (i, &len) in self.indexed_lens.iter().enumerate() {
            // Horizons tile the real region [pad, len); the context of the
            // earliest windows dips into the zero pad.
            for h in eligible_horizons(len, c.max(self.pad), tau, tau) {
                specs.push(WindowSpec {
                    instance: i,
                    context: (h - c..h).collect(),
                    horizon_start: h,
                    horizon_len: tau,
                    mode: SamplerMode::Vanilla,
                });
            }
        }
        specs
    }

    fn freeze_fixed(&self) -> Result<Vec<WindowSpec>> {
        let mut specs = Vec::new();
        let c = self.cfg.context_len;
        let tau = self.cfg.horizon_len;
        for (i, &len) in self.indexed_lens.iter().enumerate() {
            let mut rng = stream(self.seed, "fixed-freeze", i as u64);
            for h in eligible_horizons(len, c, tau, tau) {
                let bw_start = (h + tau).saturating_sub(self.cfg.big_window);
                specs.push(WindowSpec {
                    instance: i,
                    context: sample_ordered(&mut rng, bw_start, h, c),
                    horizon_start: h,
                    horizon_len: tau,
                    mode: SamplerMode::Fixed,
                });
            }
        }
        Ok(specs)
    }

    /// The mode's base task list: the full grid for vanilla, the frozen
    /// distinct tasks for fixed, and a budget-sized fresh draw for
    /// augmented.
    pub fn base_specs(&self) -> Vec<WindowSpec> {
        match self.mode {
            SamplerMode::Vanilla | SamplerMode::Fixed => self.frozen.clone(),
            SamplerMode::Augmented => self.draw(0, &self.budgets),
        }
    }

    /// Fresh augmented specs for an epoch; per-instance counts follow
    /// `allocation`.
    pub fn draw(&self, epoch: u64, allocation: &[usize]) -> Vec<WindowSpec> {
        debug_assert_eq!(self.mode, SamplerMode::Augmented);
        let c = self.cfg.context_len;
        let tau = self.cfg.horizon_len;
        let mut specs = Vec::with_capacity(allocation.iter().sum());
        for (i, &count) in allocation.iter().enumerate() {
            let len = self.indexed_lens[i];
            let mut rng = stream(self.seed, "aug-epoch", (epoch << 32) | i as u64);
            for _ in 0..count {
                let h = rng.random_range(c..=len - tau);
                specs.push(WindowSpec {
                    instance: i,
                    context: sample_ordered(&mut rng, 0, h, c),
                    horizon_start: h,
                    horizon_len: tau,
                    mode: SamplerMode::Augmented,
                });
            }
        }
        specs
    }

    pub fn per_instance_budgets(&self) -> &[usize] {
        &self.budgets
    }
}
