//! Critical-value tables.
//!
//! ADF critical values use response surfaces in the effective sample
//! size (beta_inf + b1/T + b2/T^2 + b3/T^3); the 2.5% rows carry only
//! the asymptotic point. KPSS critical values are the standard fixed
//! points. p-values come from linear interpolation across the four
//! tabulated significance levels, clamped to [0.0001, 0.9999].

/// Significance levels of the tabulated columns.
pub const LEVELS: [f64; 4] = [0.01, 0.025, 0.05, 0.10];

type Surface = [[f64; 4]; 4];

/// Rows: 1%, 2.5%, 5%, 10%. Columns: beta_inf, b1, b2, b3.
const TAU_NC: Surface = [
    [-2.56574, -2.2358, -3.627, 0.0],
    [-2.23, 0.0, 0.0, 0.0],
    [-1.94100, -0.2686, -3.365, 31.223],
    [-1.61682, 0.2656, -2.714, 25.364],
];

const TAU_C: Surface = [
    [-3.43035, -6.5393, -16.786, -79.433],
    [-3.12, 0.0, 0.0, 0.0],
    [-2.86154, -2.8903, -4.234, -40.040],
    [-2.56677, -1.5384, -2.809, 0.0],
];

const TAU_CT: Surface = [
    [-3.95877, -9.0531, -28.428, -134.155],
    [-3.66, 0.0, 0.0, 0.0],
    [-3.41049, -4.3904, -9.036, -45.374],
    [-3.12705, -2.5856, -3.925, -22.380],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdfSurface {
    NoConstant,
    Constant,
    ConstantTrend,
}

/// ADF critical values at the four levels for effective sample size `t`.
pub fn adf_criticals(surface: AdfSurface, t: usize) -> [f64; 4] {
    let table = match surface {
        AdfSurface::NoConstant => &TAU_NC,
        AdfSurface::Constant => &TAU_C,
        AdfSurface::ConstantTrend => &TAU_CT,
    };
    let tf = t as f64;
    let mut out = [0.0; 4];
    for (row, slot) in table.iter().zip(out.iter_mut()) {
        *slot = row[0] + row[1] / tf + row[2] / (tf * tf) + row[3] / (tf * tf * tf);
    }
    out
}

/// KPSS critical values (level regression) at 1%, 2.5%, 5%, 10%.
pub const KPSS_LEVEL: [f64; 4] = [0.739, 0.574, 0.463, 0.347];
/// KPSS critical values (trend regression) at 1%, 2.5%, 5%, 10%.
pub const KPSS_TREND: [f64; 4] = [0.216, 0.176, 0.146, 0.119];

/// Interpolate a p-value from (critical value, level) pairs.
///
/// `ascending` tells whether the critical values grow with the level
/// (ADF: yes, less negative at 10%; KPSS: no, they shrink).
pub fn interpolate_p(statistic: f64, criticals: &[f64; 4], ascending: bool) -> f64 {
    // Normalize to ascending (crit, level) pairs in crit order.
    let pairs: Vec<(f64, f64)> = if ascending {
        criticals.iter().copied().zip(LEVELS).collect()
    } else {
        criticals.iter().rev().copied().zip(LEVELS.iter().rev().copied()).collect()
    };
    let p = if statistic <= pairs[0].0 {
        let (x0, y0) = pairs[0];
        let (x1, y1) = pairs[1];
        y0 + (statistic - x0) * (y1 - y0) / (x1 - x0)
    } else if statistic >= pairs[3].0 {
        let (x0, y0) = pairs[2];
        let (x1, y1) = pairs[3];
        y1 + (statistic - x1) * (y1 - y0) / (x1 - x0)
    } else {
        let seg = pairs.windows(2).find(|w| statistic <= w[1].0).unwrap();
        let (x0, y0) = seg[0];
        let (x1, y1) = seg[1];
        y0 + (statistic - x0) * (y1 - y0) / (x1 - x0)
    };
    p.clamp(0.0001, 0.9999)
}
