//! Forecast accuracy metrics over all horizons and test instances:
//! MAPE, RMSE, coefficient of variance, forecast skill, and per-horizon
//! error distributions for box plots.

use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute-value floor applied to the MAPE denominator, in watts.
pub const MAPE_FLOOR_W: f64 = 1.0;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("actual holds {actual} values, forecast {forecast}")]
    ShapeMismatch { actual: usize, forecast: usize },
    #[error("length {len} is not a multiple of the horizon {horizon}")]
    RaggedMatrix { len: usize, horizon: usize },
    #[error("no data")]
    Empty,
    #[error("mean of actual values is zero; CV undefined")]
    ZeroMeanActual,
    #[error("reference RMSE must be positive, got {0}")]
    ZeroReference(f64),
}

fn check_pair<T>(actual: &[T], forecast: &[T]) -> Result<(), MetricsError> {
    if actual.is_empty() {
        return Err(MetricsError::Empty);
    }
    if actual.len() != forecast.len() {
        return Err(MetricsError::ShapeMismatch {
            actual: actual.len(),
            forecast: forecast.len(),
        });
    }
    Ok(())
}

/// Mean absolute percentage error (dimensionless; multiply by 100 for
/// percent). Actual values are floored at `floor_w` in magnitude.
pub fn mape<T: Scalar>(actual: &[T], forecast: &[T], floor_w: f64) -> Result<f64, MetricsError> {
    check_pair(actual, forecast)?;
    let mut acc = 0.0;
    for (&y, &f) in actual.iter().zip(forecast.iter()) {
        let y = y.as_f64();
        let f = f.as_f64();
        acc += (y - f).abs() / y.abs().max(floor_w);
    }
    Ok(acc / actual.len() as f64)
}

/// Root mean squared error over all instances and horizons.
pub fn rmse<T: Scalar>(actual: &[T], forecast: &[T]) -> Result<f64, MetricsError> {
    check_pair(actual, forecast)?;
    let mut acc = 0.0;
    for (&y, &f) in actual.iter().zip(forecast.iter()) {
        let d = y.as_f64() - f.as_f64();
        acc += d * d;
    }
    Ok((acc / actual.len() as f64).sqrt())
}

/// Coefficient of variance in percent: the printed formula divides the
/// squared-error sum by N*(H-1) before the root, then normalizes by the
/// mean of all actual values.
pub fn cv<T: Scalar>(actual: &[T], forecast: &[T], horizon: usize) -> Result<f64, MetricsError> {
    check_pair(actual, forecast)?;
    if horizon < 2 || actual.len() % horizon != 0 {
        return Err(MetricsError::RaggedMatrix {
            len: actual.len(),
            horizon,
        });
    }
    let n = actual.len() / horizon;
    let mean_y = actual.iter().map(|v| v.as_f64()).sum::<f64>() / actual.len() as f64;
    if mean_y == 0.0 {
        return Err(MetricsError::ZeroMeanActual);
    }
    let mut acc = 0.0;
    for (&y, &f) in actual.iter().zip(forecast.iter()) {
        let d = y.as_f64() - f.as_f64();
        acc += d * d;
    }
    Ok((acc / (n as f64 * (horizon as f64 - 1.0))).sqrt() / mean_y * 100.0)
}

/// Forecast skill in percent: squared-RMSE improvement over a
/// reference model; 0 at parity, 100 for a perfect forecast.
pub fn fs(model_rmse: f64, reference_rmse: f64) -> Result<f64, MetricsError> {
    if !(reference_rmse > 0.0) {
        return Err(MetricsError::ZeroReference(reference_rmse));
    }
    let ratio = model_rmse / reference_rmse;
    Ok((1.0 - ratio * ratio) * 100.0)
}

/// Five-number summary with Tukey whiskers.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BoxSummary {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub lo_whisker: f64,
    pub hi_whisker: f64,
    pub outliers: usize,
    pub mean: f64,
}

/// Per-horizon error distributions, absolute and signed.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HorizonSummary {
    pub horizon: usize,
    pub abs_error: BoxSummary,
    pub signed_error: BoxSummary,
}

/// Linearly interpolated quantile of a sorted slice.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = p * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn box_summary(values: &mut Vec<f64>) -> BoxSummary {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q1 = quantile_sorted(values, 0.25);
    let median = quantile_sorted(values, 0.5);
    let q3 = quantile_sorted(values, 0.75);
    let iqr = q3 - q1;
    let lo_fence = q1 - 1.5 * iqr;
    let hi_fence = q3 + 1.5 * iqr;
    let lo_whisker = values
        .iter()
        .copied()
        .find(|&v| v >= lo_fence)
        .unwrap_or(q1);
    let hi_whisker = values
        .iter()
        .rev()
        .copied()
        .find(|&v| v <= hi_fence)
        .unwrap_or(q3);
    let outliers = values.iter().filter(|&&v| v < lo_fence || v > hi_fence).count();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    BoxSummary {
        median,
        q1,
        q3,
        lo_whisker,
        hi_whisker,
        outliers,
        mean,
    }
}

/// Error distribution at each horizon, aggregated over instances.
pub fn horizon_error_profile<T: Scalar>(
    actual: &[T],
    forecast: &[T],
    horizon: usize,
) -> Result<Vec<HorizonSummary>, MetricsError> {
    check_pair(actual, forecast)?;
    if horizon == 0 || actual.len() % horizon != 0 {
        return Err(MetricsError::RaggedMatrix {
            len: actual.len(),
            horizon,
        });
    }
    let n = actual.len() / horizon;
    let mut out = Vec::with_capacity(horizon);
    for h in 0..horizon {
        let mut signed: Vec<f64> = (0..n)
            .map(|i| actual[i * horizon + h].as_f64() - forecast[i * horizon + h].as_f64())
            .collect();
        let mut abs: Vec<f64> = signed.iter().map(|v| v.abs()).collect();
        out.push(HorizonSummary {
            horizon: h,
            abs_error: box_summary(&mut abs),
            signed_error: box_summary(&mut signed),
        });
    }
    Ok(out)
}

/// Full evaluation of one forecast matrix against the actuals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Dimensionless MAPE as printed.
    pub mape: f64,
    /// MAPE scaled by 100, as tabulated.
    pub mape_pct: f64,
    pub rmse: f64,
    pub cv: f64,
    /// Forecast skill against the reference RMSE, when one was given.
    pub fs: Option<f64>,
    pub mape_floor_w: f64,
    pub instances: usize,
    pub horizon: usize,
    pub per_horizon: Vec<HorizonSummary>,
}

pub fn evaluate<T: Scalar>(
    actual: &[T],
    forecast: &[T],
    horizon: usize,
    reference_rmse: Option<f64>,
) -> Result<MetricsReport, MetricsError> {
    let m = mape(actual, forecast, MAPE_FLOOR_W)?;
    let r = rmse(actual, forecast)?;
    let c = cv(actual, forecast, horizon)?;
    let skill = reference_rmse.map(|rr| fs(r, rr)).transpose()?;
    Ok(MetricsReport {
        mape: m,
        mape_pct: 100.0 * m,
        rmse: r,
        cv: c,
        fs: skill,
        mape_floor_w: MAPE_FLOOR_W,
        instances: actual.len() / horizon,
        horizon,
        per_horizon: horizon_error_profile(actual, forecast, horizon)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_examples() {
        assert_eq!(mape(&[100.0], &[150.0], 1.0).unwrap(), 0.5);
        assert_eq!(mape(&[100.0], &[100.0], 1.0).unwrap(), 0.0);

        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        let r = rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert!((r - (25.0f64 / 2.0).sqrt()).abs() < 1e-12);

        // N=1, H=2, y=[10,10], f=[10,12] -> sqrt(4/1)/10*100 = 20%.
        let c = cv(&[10.0, 10.0], &[10.0, 12.0], 2).unwrap();
        assert!((c - 20.0).abs() < 1e-12);
        let perfect = cv(&[10.0, 10.0], &[10.0, 10.0], 2).unwrap();
        assert_eq!(perfect, 0.0);

        assert_eq!(fs(5.0, 5.0).unwrap(), 0.0);
        assert_eq!(fs(0.0, 5.0).unwrap(), 100.0);
        let half = fs(5.0 / 2.0f64.sqrt(), 5.0).unwrap();
        assert!((half - 50.0).abs() < 1e-12);
        assert!(fs(1.0, 0.0).is_err());
    }

    #[test]
    fn error_paths() {
        assert!(matches!(
            mape::<f64>(&[], &[], 1.0),
            Err(MetricsError::Empty)
        ));
        assert!(matches!(
            rmse(&[1.0], &[1.0, 2.0]),
            Err(MetricsError::ShapeMismatch { .. })
        ));
        assert!(matches!(
            cv(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], 2),
            Err(MetricsError::RaggedMatrix { .. })
        ));
        assert!(matches!(
            cv(&[1.0, -1.0], &[0.0, 0.0], 2),
            Err(MetricsError::ZeroMeanActual)
        ));
    }

    #[test]
    fn rmse_summation_identity() {
        let actual: Vec<f64> = (0..96).map(|i| (i as f64 * 0.37).sin() * 50.0 + 120.0).collect();
        let forecast: Vec<f64> = actual.iter().map(|v| v * 1.1 - 3.0).collect();
        let r = rmse(&actual, &forecast).unwrap();
        let direct: f64 = actual
            .iter()
            .zip(forecast.iter())
            .map(|(y, f)| (y - f) * (y - f))
            .sum();
        assert!((r * r * 96.0 - direct).abs() < 1e-9 * direct.max(1.0));
    }

    #[test]
    fn mape_scale_invariance() {
        let actual: Vec<f64> = (1..49).map(|i| i as f64 * 7.3 + 25.0).collect();
        let forecast: Vec<f64> = actual.iter().map(|v| v * 0.93 + 4.0).collect();
        // Use a zero floor so scaling is exact regardless of magnitude.
        let a = mape(&actual, &forecast, 0.0).unwrap();
        let scaled_a: Vec<f64> = actual.iter().map(|v| v * 321.0).collect();
        let scaled_f: Vec<f64> = forecast.iter().map(|v| v * 321.0).collect();
        let b = mape(&scaled_a, &scaled_f, 0.0).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn quartiles_match_sort_oracle() {
        let horizon = 4;
        let n = 25;
        let actual: Vec<f64> = (0..n * horizon).map(|i| ((i * 13 % 97) as f64) * 1.7).collect();
        let forecast: Vec<f64> = (0..n * horizon).map(|i| ((i * 29 % 89) as f64) * 1.3).collect();
        let profile = horizon_error_profile(&actual, &forecast, horizon).unwrap();
        assert_eq!(profile.len(), horizon);
        for h in 0..horizon {
            let mut errs: Vec<f64> = (0..n)
                .map(|i| (actual[i * horizon + h] - forecast[i * horizon + h]).abs())
                .collect();
            errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            // Full-sort oracle for the median: midpoint of sorted values.
            let want_median = if n % 2 == 1 {
                errs[n / 2]
            } else {
                (errs[n / 2 - 1] + errs[n / 2]) / 2.0
            };
            assert!((profile[h].abs_error.median - want_median).abs() < 1e-12);
            assert!(profile[h].abs_error.q1 <= profile[h].abs_error.median);
            assert!(profile[h].abs_error.median <= profile[h].abs_error.q3);
        }
    }

    #[test]
    fn perfect_forecast_gives_zero_summaries() {
        let actual: Vec<f64> = (0..96).map(|i| i as f64).collect();
        let profile = horizon_error_profile(&actual, &actual, 48).unwrap();
        for h in &profile {
            assert_eq!(h.abs_error.median, 0.0);
            assert_eq!(h.abs_error.q3, 0.0);
            assert_eq!(h.abs_error.outliers, 0);
            assert_eq!(h.signed_error.median, 0.0);
        }
    }

    #[test]
    fn single_instance_median_is_that_error() {
        let actual = vec![10.0, 20.0];
        let forecast = vec![7.0, 26.0];
        let profile = horizon_error_profile(&actual, &forecast, 2).unwrap();
        assert_eq!(profile[0].abs_error.median, 3.0);
        assert_eq!(profile[1].abs_error.median, 6.0);
        assert_eq!(profile[1].signed_error.median, -6.0);
    }

    #[test]
    fn evaluate_assembles_everything() {
        let actual: Vec<f64> = (0..96).map(|i| 100.0 + (i % 48) as f64).collect();
        let forecast: Vec<f64> = actual.iter().map(|v| v + 5.0).collect();
        let report = evaluate(&actual, &forecast, 48, Some(10.0)).unwrap();
        assert_eq!(report.instances, 2);
        assert_eq!(report.per_horizon.len(), 48);
        assert!((report.rmse - 5.0).abs() < 1e-12);
        assert!((report.fs.unwrap() - fs(5.0, 10.0).unwrap()).abs() < 1e-12);
        assert!((report.mape_pct - 100.0 * report.mape).abs() < 1e-15);
        assert!(report.rmse >= 0.0 && report.cv >= 0.0);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(250))]

        #[test]
        fn metric_invariants(
            pairs in proptest::collection::vec((1.0f64..1e4, -1e4f64..1e4), 2..96),
        ) {
            let actual: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let forecast: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let h = actual.len();
            let r = rmse(&actual, &forecast).unwrap();
            let m = mape(&actual, &forecast, MAPE_FLOOR_W).unwrap();
            let c = cv(&actual, &forecast, h).unwrap();
            proptest::prop_assert!(r >= 0.0 && m >= 0.0 && c >= 0.0);
            // fs(r, r) = 0; fs(0, r) = 100; fs <= 100 always.
            if r > 0.0 {
                proptest::prop_assert!((fs(r, r).unwrap()).abs() < 1e-9);
                proptest::prop_assert!((fs(0.0, r).unwrap() - 100.0).abs() < 1e-9);
                proptest::prop_assert!(fs(2.0 * r, r).unwrap() <= 100.0);
            }
            // RMSE summation identity.
            let direct: f64 = actual.iter().zip(&forecast).map(|(y, f)| (y - f) * (y - f)).sum();
            proptest::prop_assert!((r * r * actual.len() as f64 - direct).abs() <= 1e-9 * direct.max(1.0));
        }
    }
}
