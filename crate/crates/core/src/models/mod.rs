//! Forecasting models: the mWDN(InceptionTime) network and the
//! historical-mean baseline.

mod baseline;
mod forecaster;
mod inception;
mod mwdn;

pub use baseline::{historical_mean_forecast, HISTORY_DAYS};
pub use forecaster::{
    imf_seed, micro_profile, rand_inputs, sum_forecasts, train, ForecastModelKind, ModelProfile,
    MwdnInception, TrainConfig, TrainReport, TrainedForecaster, WindowForecaster, HORIZON,
};
pub use inception::{InceptionConfig, InceptionTime};
pub use mwdn::{CascadeTrace, LevelGeometry, MwdnCascade, MwdnConfig, PoolVariant};

use crate::autodiff::TensorError;
use crate::wavelet::WaveletError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Wavelet(#[from] WaveletError),
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("training loss became non-finite at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("standardization parameters are unfitted or degenerate")]
    UnfittedStandardization,
    #[error("insufficient history before {target}: {detail}")]
    InsufficientHistory { target: i64, detail: String },
}
