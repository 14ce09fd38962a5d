//! Historical-mean baseline: the forecast for a day is the average of
//! four calendar-aligned consumption features.
//!
//! F1: last day of the same day type (weekday targets use yesterday,
//!     Saturday and Sunday the same day a week back, Monday the day
//!     four days back).
//! F2: mean of the same day 1, 2 and 3 weeks back.
//! F3: mean of the previous seven days.
//! F4: the previous day's scalar mean, repeated across the horizon.

use super::ModelError;
use crate::data::{day_of_week, ResampledProfile, SECONDS_PER_DAY, STEPS_PER_DAY};

/// Days of history the baseline needs before a target day.
pub const HISTORY_DAYS: usize = 21;

/// Same-day-type lookback in days for a target weekday (0 = Monday).
fn f1_offset(weekday: u8) -> usize {
    match weekday {
        0 => 4,         // Monday
        1..=4 => 1,     // Tuesday..Friday
        5 => 7,         // Saturday
        _ => 7,         // Sunday: same day a week back
    }
}

/// Forecast the 48 buckets of the day starting at `target_day_start`
/// from the history strictly before it.
pub fn historical_mean_forecast(
    history: &ResampledProfile,
    target_day_start: i64,
) -> Result<Vec<f64>, ModelError> {
    let offset = target_day_start - history.start_time;
    if offset <= 0 || offset % SECONDS_PER_DAY != 0 {
        return Err(ModelError::InvalidConfig(format!(
            "target day start {target_day_start} is not a later midnight of the profile"
        )));
    }
    let day = (offset / SECONDS_PER_DAY) as usize;
    let days_available = history.len() / STEPS_PER_DAY;
    if day < HISTORY_DAYS || day > days_available {
        return Err(ModelError::InsufficientHistory {
            target: target_day_start,
            detail: format!(
                "need {HISTORY_DAYS} prior days, target day index {day} of {days_available}"
            ),
        });
    }

    let day_slice = |d: usize| -> Result<&[f64], ModelError> {
        let lo = d * STEPS_PER_DAY;
        let hi = lo + STEPS_PER_DAY;
        if history.gap_mask[lo..hi].iter().any(|&m| m) {
            return Err(ModelError::InsufficientHistory {
                target: target_day_start,
                detail: format!("day {d} of the history has gaps"),
            });
        }
        Ok(&history.power_w_30min[lo..hi])
    };

    let weekday = day_of_week(target_day_start);
    let f1 = day_slice(day - f1_offset(weekday))?;

    let mut f2 = [0.0f64; STEPS_PER_DAY];
    for back in [7usize, 14, 21] {
        let d = day_slice(day - back)?;
        for (acc, &v) in f2.iter_mut().zip(d) {
            *acc += v / 3.0;
        }
    }

    let mut f3 = [0.0f64; STEPS_PER_DAY];
    for back in 1..=7usize {
        let d = day_slice(day - back)?;
        for (acc, &v) in f3.iter_mut().zip(d) {
            *acc += v / 7.0;
        }
    }

    let prev = day_slice(day - 1)?;
    let f4 = prev.iter().sum::<f64>() / STEPS_PER_DAY as f64;

    Ok((0..STEPS_PER_DAY)
        .map(|t| (f1[t] + f2[t] + f3[t] + f4) / 4.0)
        .collect())
}
