//! Autoregressive probabilistic inference, rho-quantile metrics, and the
//! benchmark / sampler-ablation harnesses.

mod benchmark;
mod predict;
mod quantile;
pub mod reference;
mod report;

pub use benchmark::{
    compare_samplers, evaluate_benchmark, evaluate_forecast, run_trials,
    seasonal_naive_forecast, seasonality_benchmark, EvalProtocol, SeasonalityConfig,
    SeasonalityOutcome,
};
pub use predict::{predict_samples, ForecastRequest};
pub use quantile::{empirical_quantile, quantile_loss, QlAccumulator};
pub use report::{human_table, plot_csv, summarize, to_records, ForecastReport, TrialQl, TrialRecord};
