//! 30-minute resampling, sliding-window construction, chronological split.

use super::{
    day_of_week, hour_of_day, DataError, LoadProfile, ResampledProfile, WindowedDataset,
    BUCKET_SECONDS, CHANNELS, SECONDS_PER_DAY, STEPS_PER_DAY, WINDOW_LEN,
};
use crate::scalar::Scalar;

/// Average a raw profile into 30-minute buckets.
///
/// The bucket grid is aligned to day boundaries and extended to cover
/// whole days, so partially covered first/last days show up as masked
/// buckets and bucket index mod 48 is the time of day.
pub fn resample_30min(profile: &LoadProfile) -> Result<ResampledProfile, DataError> {
    let first = *profile.timestamps.first().ok_or(DataError::EmptyProfile)?;
    let last = *profile.timestamps.last().unwrap();

    let start_time = first.div_euclid(SECONDS_PER_DAY) * SECONDS_PER_DAY;
    let end_time = (last.div_euclid(SECONDS_PER_DAY) + 1) * SECONDS_PER_DAY;
    let n_buckets = ((end_time - start_time) / BUCKET_SECONDS) as usize;

    let mut sums = vec![0.0f64; n_buckets];
    let mut counts = vec![0u64; n_buckets];
    for (&ts, &p) in profile.timestamps.iter().zip(profile.power_w.iter()) {
        let b = ((ts - start_time).div_euclid(BUCKET_SECONDS)) as usize;
        sums[b] += p;
        counts[b] += 1;
    }

    let mut power_w_30min = vec![0.0f64; n_buckets];
    let mut gap_mask = vec![false; n_buckets];
    for b in 0..n_buckets {
        if counts[b] == 0 {
            gap_mask[b] = true;
        } else {
            power_w_30min[b] = sums[b] / counts[b] as f64;
        }
    }

    debug_assert_eq!(n_buckets % STEPS_PER_DAY, 0);
    Ok(ResampledProfile {
        household_id: profile.household_id.clone(),
        start_time,
        power_w_30min,
        gap_mask,
    })
}

/// Build unit-stride 48h windows over every run of clean buckets.
///
/// A window needs 96 consecutive unmasked buckets: the first 48 feed
/// channel 0, the last 48 are the target. Windows touching any masked
/// bucket are dropped.
pub fn build_windows(rp: &ResampledProfile) -> Result<WindowedDataset<f64>, DataError> {
    let need = 2 * WINDOW_LEN;
    let mut ds = WindowedDataset::empty();
    let mut longest = 0usize;

    let mut run_start = None;
    let n = rp.len();
    for b in 0..=n {
        let clean = b < n && !rp.gap_mask[b];
        match (clean, run_start) {
            (true, None) => run_start = Some(b),
            (false, Some(s)) => {
                longest = longest.max(b - s);
                append_run_windows(&mut ds, rp, s, b);
                run_start = None;
            }
            _ => {}
        }
    }

    if ds.n() == 0 {
        return Err(DataError::InsufficientData { need, longest });
    }
    Ok(ds)
}

fn append_run_windows(ds: &mut WindowedDataset<f64>, rp: &ResampledProfile, start: usize, end: usize) {
    let need = 2 * WINDOW_LEN;
    if end - start < need {
        return;
    }
    for i in start..=(end - need) {
        let t0 = rp.bucket_time(i);
        ds.window_start_times.push(t0);
        ds.inputs.extend_from_slice(&rp.power_w_30min[i..i + WINDOW_LEN]);
        for t in 0..WINDOW_LEN {
            let sec = t0 + t as i64 * BUCKET_SECONDS;
            ds.inputs.push(hour_of_day(sec) as f64);
        }
        for t in 0..WINDOW_LEN {
            let sec = t0 + t as i64 * BUCKET_SECONDS;
            ds.inputs.push(day_of_week(sec) as f64);
        }
        ds.targets
            .extend_from_slice(&rp.power_w_30min[i + WINDOW_LEN..i + need]);
    }
    debug_assert_eq!(ds.inputs.len(), ds.n() * CHANNELS * WINDOW_LEN);
}

/// Split windows chronologically: the earliest `floor(N * fraction)`
/// windows train, the rest test.
pub fn chrono_split<T: Scalar>(
    ds: &WindowedDataset<T>,
    train_fraction: f64,
) -> Result<(WindowedDataset<T>, WindowedDataset<T>), DataError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DataError::InvalidFraction(train_fraction));
    }
    let n = ds.n();
    let n_train = ((n as f64) * train_fraction).floor() as usize;
    if n_train == 0 {
        return Err(DataError::EmptySplit("train"));
    }
    if n_train == n {
        return Err(DataError::EmptySplit("test"));
    }
    Ok((ds.slice(0..n_train), ds.slice(n_train..n)))
}
