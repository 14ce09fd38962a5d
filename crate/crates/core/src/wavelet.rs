//! Daubechies wavelet filter pairs.
//!
//! Coefficients are the standard published orthonormal scaling filters;
//! decomposition filters follow the usual convention: low-pass is the
//! reversed scaling filter, high-pass is the alternating-sign scaling
//! filter. `dbN` here names the N-vanishing-moment family member with
//! 2N taps, so `db4` is the 8-tap pair.

use crate::scalar::Scalar;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WaveletError {
    #[error("unknown wavelet family `{0}` (supported: haar, db1..db8)")]
    Unknown(String),
}

/// A decomposition filter pair.
#[derive(Debug, Clone)]
pub struct WaveletFilter<T> {
    pub name: String,
    pub lowpass: Vec<T>,
    pub highpass: Vec<T>,
}

impl<T: Scalar> WaveletFilter<T> {
    pub fn by_name(name: &str) -> Result<Self, WaveletError> {
        let scaling: &[f64] = match name {
            "haar" | "db1" => &DB1,
            "db2" => &DB2,
            "db3" => &DB3,
            "db4" => &DB4,
            "db5" => &DB5,
            "db6" => &DB6,
            "db7" => &DB7,
            "db8" => &DB8,
            other => return Err(WaveletError::Unknown(other.to_string())),
        };
        let n = scaling.len();
        let lowpass = (0..n).map(|k| T::c(scaling[n - 1 - k])).collect();
        let highpass = (0..n)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                T::c(sign * scaling[k])
            })
            .collect();
        Ok(Self {
            name: name.to_string(),
            lowpass,
            highpass,
        })
    }

    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }
}

const DB1: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

const DB2: [f64; 4] = [
    0.482962913144534,
    0.836516303737808,
    0.224143868042013,
    -0.129409522551260,
];

const DB3: [f64; 6] = [
    0.332670552950083,
    0.806891509311092,
    0.459877502118491,
    -0.135011020010255,
    -0.085441273882027,
    0.035226291882100,
];

const DB4: [f64; 8] = [
    0.230377813308855,
    0.714846570552542,
    0.630880767929590,
    -0.027983769416984,
    -0.187034811717090,
    0.030841381835987,
    0.032883011666983,
    -0.010597401784997,
];

const DB5: [f64; 10] = [
    0.160102397974125,
    0.603829269797473,
    0.724308528437772,
    0.138428145901320,
    -0.242294887066190,
    -0.032244869585030,
    0.077571493840065,
    -0.006241490213012,
    -0.012580751999016,
    0.003335725285002,
];

const DB6: [f64; 12] = [
    0.111540743350109,
    0.494623890398453,
    0.751133908021093,
    0.315250351709195,
    -0.226264693965169,
    -0.129766867567262,
    0.097501605587079,
    0.027522865530016,
    -0.031582039317674,
    0.000553842201161,
    0.004777257511010,
    -0.001077301085308,
];

const DB7: [f64; 14] = [
    0.077852054085062,
    0.396539319482306,
    0.729132090846555,
    0.469782287405359,
    -0.143906003929106,
    -0.224036184994166,
    0.071309219267050,
    0.080612609151065,
    -0.038029936935034,
    -0.016574541631250,
    0.012550998556013,
    0.000429577973205,
    -0.001801640704047,
    0.000353713799974,
];

const DB8: [f64; 16] = [
    0.054415842243082,
    0.312871590914466,
    0.675630736297212,
    0.585354683654869,
    -0.015829105256023,
    -0.284015542962428,
    0.000472484573552,
    0.128747426620186,
    -0.017369301002022,
    -0.044088253931064,
    0.013981027917015,
    0.008746094047015,
    -0.004870352993452,
    -0.000391740373376,
    0.000675449406450,
    -0.000117476784124,
];
