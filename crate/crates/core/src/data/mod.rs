//! Raw load ingestion, 30-minute resampling, sliding-window dataset
//! construction, chronological splitting, and standardization.

mod ingest;
mod standardize;
mod windowing;

pub use ingest::{ingest_csv, CsvSchema};
pub use standardize::{standardize, DatasetScaler, Direction, StandardizationParams};
pub use windowing::{build_windows, chrono_split, resample_30min};

use crate::container::{self, ContainerError, ContainerHeader};
use crate::scalar::Scalar;
use std::path::Path;
use thiserror::Error;

/// 30-minute buckets per day.
pub const STEPS_PER_DAY: usize = 48;
/// Bucket width in seconds.
pub const BUCKET_SECONDS: i64 = 1800;
/// Input and forecast sequence length.
pub const WINDOW_LEN: usize = 48;
/// Input channels: load, hour of day, day of week.
pub const CHANNELS: usize = 3;
pub const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}:{line}: malformed row: {msg}")]
    MalformedRow {
        path: String,
        line: u64,
        msg: String,
    },
    #[error("{path}:{line}: timestamps not strictly increasing")]
    NonMonotonic { path: String, line: u64 },
    #[error("{path}: no data rows")]
    NoDataRows { path: String },
    #[error("load profile is empty")]
    EmptyProfile,
    #[error("need at least {need} consecutive clean buckets, longest run is {longest}")]
    InsufficientData { need: usize, longest: usize },
    #[error("train fraction {0} outside (0, 1)")]
    InvalidFraction(f64),
    #[error("split leaves an empty {0} set")]
    EmptySplit(&'static str),
    #[error(transparent)]
    Container(#[from] ContainerError),
}

/// Raw household load series at source granularity.
#[derive(Debug, Clone)]
pub struct LoadProfile {
    pub household_id: String,
    /// Strictly increasing epoch seconds.
    pub timestamps: Vec<i64>,
    /// Non-negative watts, one per timestamp.
    pub power_w: Vec<f64>,
    /// Median spacing between samples, seconds (0 when unknown).
    pub source_period_s: f64,
}

/// Load averaged into 30-minute buckets covering whole days.
#[derive(Debug, Clone)]
pub struct ResampledProfile {
    pub household_id: String,
    /// Epoch seconds of the first bucket; aligned to a day boundary.
    pub start_time: i64,
    /// Bucket means in watts; length is a multiple of 48.
    pub power_w_30min: Vec<f64>,
    /// `true` marks buckets with no source samples.
    pub gap_mask: Vec<bool>,
}

impl ResampledProfile {
    pub fn len(&self) -> usize {
        self.power_w_30min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power_w_30min.is_empty()
    }

    /// Epoch seconds at which bucket `b` starts.
    pub fn bucket_time(&self, b: usize) -> i64 {
        self.start_time + b as i64 * BUCKET_SECONDS
    }
}

/// Model-ready windows: N instances of 3x48 inputs and 48-step targets.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset<T> {
    /// Row-major `[n][channel][t]`, channel 0 load, 1 hour, 2 day.
    pub inputs: Vec<T>,
    /// Row-major `[n][t]`, the next 24h of load.
    pub targets: Vec<T>,
    /// Epoch seconds at which each input window starts.
    pub window_start_times: Vec<i64>,
}

impl<T: Scalar> WindowedDataset<T> {
    pub fn empty() -> Self {
        Self {
            inputs: Vec::new(),
            targets: Vec::new(),
            window_start_times: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.window_start_times.len()
    }

    pub fn input(&self, i: usize) -> &[T] {
        &self.inputs[i * CHANNELS * WINDOW_LEN..(i + 1) * CHANNELS * WINDOW_LEN]
    }

    pub fn channel(&self, i: usize, c: usize) -> &[T] {
        let base = i * CHANNELS * WINDOW_LEN + c * WINDOW_LEN;
        &self.inputs[base..base + WINDOW_LEN]
    }

    pub fn channel_mut(&mut self, i: usize, c: usize) -> &mut [T] {
        let base = i * CHANNELS * WINDOW_LEN + c * WINDOW_LEN;
        &mut self.inputs[base..base + WINDOW_LEN]
    }

    pub fn target(&self, i: usize) -> &[T] {
        &self.targets[i * WINDOW_LEN..(i + 1) * WINDOW_LEN]
    }

    pub fn target_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.targets[i * WINDOW_LEN..(i + 1) * WINDOW_LEN]
    }

    /// Rows `range` of this dataset, cloned.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            inputs: self.inputs[range.start * CHANNELS * WINDOW_LEN..range.end * CHANNELS * WINDOW_LEN]
                .to_vec(),
            targets: self.targets[range.start * WINDOW_LEN..range.end * WINDOW_LEN].to_vec(),
            window_start_times: self.window_start_times[range.clone()].to_vec(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), ContainerError> {
        let header = ContainerHeader {
            n: self.n() as u32,
            channels: CHANNELS as u32,
            length: WINDOW_LEN as u32,
        };
        let inputs: Vec<f64> = self.inputs.iter().map(|v| v.as_f64()).collect();
        let targets: Vec<f64> = self.targets.iter().map(|v| v.as_f64()).collect();
        let times: Vec<f64> = self.window_start_times.iter().map(|&t| t as f64).collect();
        container::write_container(path, header, &[&inputs, &targets, &times])
    }

    pub fn load(path: &Path) -> Result<Self, ContainerError> {
        let (header, data) = container::read_container(path)?;
        let n = header.n as usize;
        let c = header.channels as usize;
        let l = header.length as usize;
        container::expect_len(path, &data, n * c * l + n * l + n)?;
        let (inputs, rest) = data.split_at(n * c * l);
        let (targets, times) = rest.split_at(n * l);
        Ok(Self {
            inputs: inputs.iter().map(|&v| T::c(v)).collect(),
            targets: targets.iter().map(|&v| T::c(v)).collect(),
            window_start_times: times.iter().map(|&t| t as i64).collect(),
        })
    }
}

/// Hour of day (0..=23) at the given epoch second.
pub fn hour_of_day(epoch_s: i64) -> u8 {
    (epoch_s.rem_euclid(SECONDS_PER_DAY) / 3600) as u8
}

/// Day of week (0 = Monday .. 6 = Sunday) at the given epoch second.
pub fn day_of_week(epoch_s: i64) -> u8 {
    let days = epoch_s.div_euclid(SECONDS_PER_DAY);
    ((days + 3).rem_euclid(7)) as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epoch_zero_is_a_thursday() {
        assert_eq!(day_of_week(0), 3);
        assert_eq!(hour_of_day(0), 0);
        // 2020-10-01 00:00:00 UTC was a Thursday.
        assert_eq!(day_of_week(1_601_510_400), 3);
    }

    #[test]
    fn dataset_round_trips_through_container() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.lcw");
        let n = 3;
        let ds = WindowedDataset::<f64> {
            inputs: (0..n * CHANNELS * WINDOW_LEN).map(|i| i as f64 * 0.25).collect(),
            targets: (0..n * WINDOW_LEN).map(|i| -(i as f64)).collect(),
            window_start_times: vec![0, 1800, 3600],
        };
        ds.save(&path).unwrap();
        let back = WindowedDataset::<f64>::load(&path).unwrap();
        assert_eq!(ds, back);
    }
}
