//! Dataset ingestion, covariate construction, rolling-window scaling and
//! the three window-sampling regimes (vanilla / fixed / augmented).

mod batch;
mod covariates;
mod ingest;
mod sampler;
mod scaling;
mod series;
pub mod synthetic;

pub use batch::{build_batch, build_batch_padded, validation_split, Batch, WindowData};
pub use covariates::{make_covariates, CovariateMatrix, CALENDAR_DIM};
pub use ingest::{load_series, load_series_with, write_generic_csv, IngestOptions, SeriesFormat};
pub use sampler::{
    count_distinct_windows, sample_window, SamplerConfig, SamplerMode, WindowCount, WindowSampler,
    WindowSpec,
};
pub use scaling::{rolling_scale, ScalerKind};
pub use series::{zero_pad, SeriesInstance, SeriesSet};
