//! Probabilistic time-series forecasting with an autoregressive transformer
//! decoder trained on randomly sampled (non-consecutive) training windows.
//!
//! The crate is organized around the pipeline stages:
//!
//! * [`kernel`] — dense numeric primitives (matmul, masked softmax, layer
//!   norm, Adam) with hand-written backward passes checked against finite
//!   differences;
//! * [`data`] — dataset ingestion, calendar covariates, rolling-window
//!   scaling and the three window samplers (vanilla / fixed / augmented);
//! * [`model`] — the decoder network with instance embeddings and a
//!   Gaussian output head;
//! * [`train`] — teacher-forced training with horizon-restricted loss,
//!   early stopping and grid search;
//! * [`forecast`] — autoregressive sample-based prediction, ρ-quantile
//!   metrics and the benchmark / sampler-ablation harnesses.
//!
//! All numeric code is generic over [`scalar::Scalar`] (`f32` or `f64`);
//! the type aliases below pin the default `f64` instantiation used by the
//! CLI and the test suites.

pub mod data;
pub mod error;
pub mod forecast;
pub mod kernel;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod train;

pub use error::{CoreError, Result};
pub use scalar::Scalar;

/// Default scalar type for the concrete aliases below.
pub type Real = f64;

pub type Matrix = kernel::Matrix<Real>;
pub type AdamState = kernel::AdamState<Real>;
pub type SeriesSet = data::SeriesSet<Real>;
pub type SeriesInstance = data::SeriesInstance<Real>;
pub type CovariateMatrix = data::CovariateMatrix<Real>;
pub type Batch = data::Batch<Real>;
pub type WindowData = data::WindowData<Real>;
pub type ModelParams = model::ModelParams<Real>;
pub type Checkpoint = model::Checkpoint<Real>;
pub type FitResult = train::FitResult<Real>;
pub type ForecastReport = forecast::ForecastReport;








