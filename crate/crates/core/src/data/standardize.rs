//! Zero-mean unit-variance scaling with exact inversion.

use super::{WindowedDataset, CHANNELS, WINDOW_LEN};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Per-channel mean and standard deviation, fit on training data only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams<T> {
    pub mean: T,
    pub std: T,
}

impl<T: Scalar> StandardizationParams<T> {
    pub fn identity() -> Self {
        Self {
            mean: T::zero(),
            std: T::one(),
        }
    }

    /// Two-pass mean/std. A degenerate (constant) channel gets std 1 so
    /// scaling never produces NaN.
    pub fn fit(values: impl Iterator<Item = T> + Clone) -> Self {
        let mut count = 0usize;
        let mut sum = T::zero();
        for v in values.clone() {
            sum += v;
            count += 1;
        }
        if count == 0 {
            log::warn!("standardization fit on empty channel; using identity");
            return Self::identity();
        }
        let mean = sum / T::from_usize_(count);
        let mut ss = T::zero();
        for v in values {
            let d = v - mean;
            ss += d * d;
        }
        let var = ss / T::from_usize_(count);
        let std = var.sqrt();
        if std <= T::zero() || !std.is_finite() {
            log::warn!("constant channel (std 0); substituting std 1");
            return Self { mean, std: T::one() };
        }
        Self { mean, std }
    }

    #[inline]
    pub fn apply(&self, x: T, direction: Direction) -> T {
        match direction {
            Direction::Forward => (x - self.mean) / self.std,
            Direction::Inverse => x * self.std + self.mean,
        }
    }

    pub fn apply_in_place(&self, data: &mut [T], direction: Direction) {
        for v in data.iter_mut() {
            *v = self.apply(*v, direction);
        }
    }
}

/// Standardize an array, returning the transformed copy.
pub fn standardize<T: Scalar>(
    data: &[T],
    params: &StandardizationParams<T>,
    direction: Direction,
) -> Vec<T> {
    data.iter().map(|&x| params.apply(x, direction)).collect()
}

/// Channel-wise scaler for a windowed dataset. Targets share the load
/// channel's parameters since they are the same physical quantity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetScaler<T> {
    pub load: StandardizationParams<T>,
    pub hour: StandardizationParams<T>,
    pub day: StandardizationParams<T>,
}

impl<T: Scalar> DatasetScaler<T> {
    /// Fit each channel from the training split.
    pub fn fit(train: &WindowedDataset<T>) -> Self {
        let chan = |c: usize| {
            train
                .inputs
                .chunks_exact(CHANNELS * WINDOW_LEN)
                .flat_map(move |w| w[c * WINDOW_LEN..(c + 1) * WINDOW_LEN].iter().copied())
        };
        Self {
            load: StandardizationParams::fit(chan(0)),
            hour: StandardizationParams::fit(chan(1)),
            day: StandardizationParams::fit(chan(2)),
        }
    }

    pub fn channel_params(&self, c: usize) -> &StandardizationParams<T> {
        match c {
            0 => &self.load,
            1 => &self.hour,
            2 => &self.day,
            _ => panic!("channel {c} out of range"),
        }
    }

    /// Transform inputs and targets of a dataset.
    pub fn transform(&self, ds: &WindowedDataset<T>, direction: Direction) -> WindowedDataset<T> {
        let mut out = ds.clone();
        for i in 0..out.n() {
            for c in 0..CHANNELS {
                self.channel_params(c)
                    .apply_in_place(out.channel_mut(i, c), direction);
            }
            self.load.apply_in_place(out.target_mut(i), direction);
        }
        out
    }
}
