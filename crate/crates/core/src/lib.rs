//! Short-term multi-horizon residential load forecasting.
//!
//! The pipeline decomposes 30-minute load sequences into band-limited
//! modes with VMD, trains one wavelet-decomposition-network forecaster
//! per mode, sums the per-mode forecasts, and scores the result against
//! a calendar-feature historical-mean baseline with MAPE, RMSE, CV and
//! forecast-skill metrics plus ADF/KPSS stationarity checks.
//!
//! All numeric kernels are generic over [`scalar::Scalar`] (`f32` or
//! `f64`); the end-to-end pipeline instantiates `f64`, aliased below.

pub mod autodiff;
pub mod container;
pub mod data;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod scalar;
pub mod stationarity;
pub mod vmd;
pub mod wavelet;

pub use pipeline::PipelineError;
pub use scalar::{FftScalar, Scalar};

/// f64 windowed dataset, the pipeline's working type.
pub type WindowedDataset = data::WindowedDataset<f64>;
/// f64 standardization parameters.
pub type StandardizationParams = data::StandardizationParams<f64>;
/// f64 decomposition result.
pub type ImfSet = vmd::ImfSet<f64>;
/// f64 decomposition settings.
pub type VmdConfig = vmd::VmdConfig<f64>;
