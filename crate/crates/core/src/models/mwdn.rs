//! Trainable wavelet decomposition cascade.
//!
//! Each level maps its input sequence through a pair of dense layers
//! whose weights start as Toeplitz matrices carrying the wavelet's
//! low/high-pass taps (plus a small noise perturbation), applies a
//! sigmoid, and halves the sequence with average pooling. After I
//! levels the cascade has produced the detail sequences of every level
//! plus the final approximation.

use super::ModelError;
use crate::autodiff::{Padding, ParamId, ParamSet, Tape, Tensor, Var};
use crate::scalar::Scalar;
use crate::wavelet::WaveletFilter;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Downsampling behavior between levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoolVariant {
    /// Average pooling, kernel 2 stride 2: the wavelet halving cascade.
    Halving,
    /// Average pooling, kernel 3 stride 1, same padding: keeps lengths.
    Table1,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MwdnConfig {
    /// Decomposition depth I.
    pub levels: usize,
    /// Wavelet family backing the initialization (e.g. "db4").
    pub wavelet: String,
    /// Init perturbation, as a fraction of the mean |tap|.
    pub noise_scale: f64,
    /// Replace the sigmoid with identity (for filter-bank oracles).
    pub test_linear_mode: bool,
    pub pool: PoolVariant,
}

impl Default for MwdnConfig {
    fn default() -> Self {
        Self {
            levels: 4,
            wavelet: "db4".into(),
            noise_scale: 0.01,
            test_linear_mode: false,
            pool: PoolVariant::Halving,
        }
    }
}

impl MwdnConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.levels < 1 {
            return Err(ModelError::InvalidConfig("levels must be >= 1".into()));
        }
        if self.noise_scale < 0.0 {
            return Err(ModelError::InvalidConfig("noise_scale must be >= 0".into()));
        }
        Ok(())
    }
}

/// Length bookkeeping for one level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelGeometry {
    pub in_len: usize,
    /// Right zero-padding applied when `in_len` is odd.
    pub pad: usize,
    pub padded_len: usize,
    pub out_len: usize,
}

struct MwdnLayer {
    w_low: ParamId,
    b_low: ParamId,
    w_high: ParamId,
    b_high: ParamId,
}

pub struct MwdnCascade<T> {
    cfg: MwdnConfig,
    layers: Vec<MwdnLayer>,
    geometry: Vec<LevelGeometry>,
    _marker: std::marker::PhantomData<T>,
}

/// Forward-pass record: pooled sub-sequences ready for the sub-models,
/// plus the pre-pooling activations for filter-bank comparisons.
pub struct CascadeTrace {
    /// `[e_h(1), ..., e_h(I), e_l(I)]`, each `[B, out_len]`.
    pub subs: Vec<Var>,
    /// Per level: `(a_low, a_high)` before pooling, `[B, padded_len]`.
    pub pre_pool: Vec<(Var, Var)>,
}

fn toeplitz_init<T: Scalar>(
    taps: &[T],
    n: usize,
    noise: f64,
    rng: &mut impl Rng,
) -> Tensor<T> {
    let mean_abs: f64 =
        taps.iter().map(|c| c.as_f64().abs()).sum::<f64>() / taps.len() as f64;
    let amp = noise * mean_abs;
    let mut w = vec![T::zero(); n * n];
    for (row, chunk) in w.chunks_exact_mut(n).enumerate() {
        for (k, &tap) in taps.iter().enumerate() {
            if row + k < n {
                chunk[row + k] = tap;
            }
        }
        if amp > 0.0 {
            for v in chunk.iter_mut() {
                *v += T::c(rng.gen_range(-amp..amp));
            }
        }
    }
    Tensor::new(vec![n, n], w).unwrap()
}

fn noise_vec<T: Scalar>(n: usize, amp: f64, rng: &mut impl Rng) -> Tensor<T> {
    let data = (0..n)
        .map(|_| {
            if amp > 0.0 {
                T::c(rng.gen_range(-amp..amp))
            } else {
                T::zero()
            }
        })
        .collect();
    Tensor::new(vec![n], data).unwrap()
}

impl<T: Scalar> MwdnCascade<T> {
    pub fn init(
        cfg: &MwdnConfig,
        input_len: usize,
        params: &mut ParamSet<T>,
        prefix: &str,
        rng: &mut impl Rng,
    ) -> Result<Self, ModelError> {
        cfg.validate()?;
        let filter: WaveletFilter<T> = WaveletFilter::by_name(&cfg.wavelet)?;
        let mean_abs: f64 = filter
            .lowpass
            .iter()
            .map(|c| c.as_f64().abs())
            .sum::<f64>()
            / filter.len() as f64;
        let amp = cfg.noise_scale * mean_abs;

        let mut geometry = Vec::with_capacity(cfg.levels);
        let mut layers = Vec::with_capacity(cfg.levels);
        let mut len = input_len;
        for level in 0..cfg.levels {
            let (pad, padded) = match cfg.pool {
                PoolVariant::Halving if len % 2 == 1 => (1, len + 1),
                _ => (0, len),
            };
            let out_len = match cfg.pool {
                PoolVariant::Halving => padded / 2,
                PoolVariant::Table1 => padded,
            };
            if out_len == 0 {
                return Err(ModelError::InvalidConfig(format!(
                    "cascade exhausts the sequence at level {level}"
                )));
            }
            geometry.push(LevelGeometry {
                in_len: len,
                pad,
                padded_len: padded,
                out_len,
            });

            let w_low = toeplitz_init(&filter.lowpass, padded, cfg.noise_scale, rng);
            let b_low = noise_vec(padded, amp, rng);
            let w_high = toeplitz_init(&filter.highpass, padded, cfg.noise_scale, rng);
            let b_high = noise_vec(padded, amp, rng);
            layers.push(MwdnLayer {
                w_low: params.register(format!("{prefix}.l{level}.w_low"), w_low),
                b_low: params.register(format!("{prefix}.l{level}.b_low"), b_low),
                w_high: params.register(format!("{prefix}.l{level}.w_high"), w_high),
                b_high: params.register(format!("{prefix}.l{level}.b_high"), b_high),
            });
            len = out_len;
        }
        Ok(Self {
            cfg: cfg.clone(),
            layers,
            geometry,
            _marker: std::marker::PhantomData,
        })
    }

    pub fn geometry(&self) -> &[LevelGeometry] {
        &self.geometry
    }

    pub fn levels(&self) -> usize {
        self.cfg.levels
    }

    /// Lengths of the I+1 sub-sequences, in output order.
    pub fn sub_lengths(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self.geometry.iter().map(|g| g.out_len).collect();
        out.push(self.geometry.last().unwrap().out_len);
        out
    }

    fn pool(&self, tape: &Tape<T>, x: Var) -> Result<Var, ModelError> {
        let y = match self.cfg.pool {
            PoolVariant::Halving => tape.avg_pool1d(x, 2, 2, Padding::None)?,
            PoolVariant::Table1 => tape.avg_pool1d(x, 3, 1, Padding::Same)?,
        };
        Ok(y)
    }

    /// Run the cascade over the load sequence `[B, input_len]`.
    pub fn forward(
        &self,
        tape: &Tape<T>,
        vars: &[Var],
        load: Var,
    ) -> Result<CascadeTrace, ModelError> {
        let batch = tape.shape_of(load)[0];
        let mut cur = load;
        let mut subs = Vec::with_capacity(self.cfg.levels + 1);
        let mut pre_pool = Vec::with_capacity(self.cfg.levels);
        for (layer, geom) in self.layers.iter().zip(self.geometry.iter()) {
            if geom.pad > 0 {
                cur = tape.pad_last_axis(cur, 0, geom.pad)?;
            }
            let a_low_pre = tape.dense(cur, vars[layer.w_low.index()], vars[layer.b_low.index()])?;
            let a_high_pre =
                tape.dense(cur, vars[layer.w_high.index()], vars[layer.b_high.index()])?;
            let (a_low, a_high) = if self.cfg.test_linear_mode {
                (a_low_pre, a_high_pre)
            } else {
                (tape.sigmoid(a_low_pre), tape.sigmoid(a_high_pre))
            };
            pre_pool.push((a_low, a_high));

            let low3 = tape.reshape(a_low, vec![batch, 1, geom.padded_len])?;
            let high3 = tape.reshape(a_high, vec![batch, 1, geom.padded_len])?;
            let e_low = self.pool(tape, low3)?;
            let e_high = self.pool(tape, high3)?;
            let e_low = tape.reshape(e_low, vec![batch, geom.out_len])?;
            let e_high = tape.reshape(e_high, vec![batch, geom.out_len])?;
            subs.push(e_high);
            cur = e_low;
        }
        subs.push(cur);
        Ok(CascadeTrace { subs, pre_pool })
    }

    /// Pool auxiliary channels `[B, C, input_len]` through the same
    /// pad/pool schedule down to the length of level `level` (1-based).
    pub fn pool_channels_to_level(
        &self,
        tape: &Tape<T>,
        channels: Var,
        level: usize,
    ) -> Result<Var, ModelError> {
        let mut cur = channels;
        for geom in self.geometry.iter().take(level) {
            if geom.pad > 0 {
                cur = tape.pad_last_axis(cur, 0, geom.pad)?;
            }
            cur = self.pool(tape, cur)?;
        }
        Ok(cur)
    }
}
