//! Teacher-forced training over sampled windows: horizon-restricted
//! Gaussian NLL, Adam with gradient clipping, early stopping, grid search.

mod grid;
mod loss;
mod optimizer;
mod trainer;

pub use grid::{grid_search, GridOutcome, GridRow};
pub use loss::{nll_loss, nll_loss_backward, LossScope};
pub use optimizer::ModelOptimizer;
pub use trainer::{fit, EpochLog, FitResult, TrainConfig, TrainLog, Trainer};
