//! Experiment orchestration: configuration, the four-stage pipeline,
//! decomposition-level sweeps, baseline evaluation, and plot emission.

mod config;
mod plots;
mod run;
pub mod synth;

pub use config::{ExperimentConfig, KChoice, ProfileChoice};
pub use plots::{bars_csv, emit_plots, horizons_csv, overlay_csv};
pub use run::{
    evaluate_baseline, load_household, run_dir_for, run_pipeline, stationarity_csv,
    stationarity_table, sweep, sweep_csv, BaselineEval, RunRecord, StationarityRow,
};

use crate::container::ContainerError;
use crate::data::DataError;
use crate::metrics::MetricsError;
use crate::models::ModelError;
use crate::stationarity::StatError;
use crate::vmd::VmdError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Container(#[from] ContainerError),
    #[error(transparent)]
    Vmd(#[from] VmdError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Stats(#[from] StatError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl PipelineError {
    /// CLI exit code: 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Data(_)
            | PipelineError::Container(_)
            | PipelineError::Io(_)
            | PipelineError::Json(_) => 3,
            PipelineError::Vmd(_)
            | PipelineError::Model(_)
            | PipelineError::Metrics(_)
            | PipelineError::Stats(_) => 4,
        }
    }
}
