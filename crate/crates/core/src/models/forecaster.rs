//! The wavelet-network forecaster: the load channel runs through the
//! mWDN cascade, each resulting sub-sequence (with time channels pooled
//! to match) feeds its own InceptionTime, and a fully connected layer
//! fuses the I+1 embeddings into the 48-step forecast.

use super::inception::{InceptionConfig, InceptionTime};
use super::mwdn::{MwdnCascade, MwdnConfig};
use super::ModelError;
use crate::autodiff::{AdamState, ParamId, ParamSet, Tape, Tensor, Var};
use crate::data::{DatasetScaler, Direction, WindowedDataset, CHANNELS, WINDOW_LEN};
use crate::scalar::Scalar;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Forecast horizon in 30-minute steps.
pub const HORIZON: usize = WINDOW_LEN;

/// Architecture selector carried through configs and manifests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ForecastModelKind {
    MwdnInception,
    HistoricalMean,
    Plugin(String),
}

/// Window-based multi-horizon forecaster surface; future benchmark
/// models plug in here.
pub trait WindowForecaster<T: Scalar> {
    /// Map raw watt-space inputs `[B,3,48]` to watt forecasts `[B,48]`.
    fn forecast(&self, inputs: &Tensor<T>) -> Result<Tensor<T>, ModelError>;

    fn kind(&self) -> ForecastModelKind;
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelProfile {
    pub mwdn: MwdnConfig,
    pub inception: InceptionConfig,
}

impl ModelProfile {
    /// Full-size architecture as reported by the reference tables.
    pub fn paper(levels: usize) -> Self {
        Self {
            mwdn: MwdnConfig {
                levels,
                ..Default::default()
            },
            inception: InceptionConfig {
                modules: 6,
                filters: 32,
                kernel_sizes: [39, 19, 9],
                bottleneck: 32,
                bn_momentum: 0.1,
                residual_every: 3,
            },
        }
    }

    /// Reduced architecture for desk-scale runs and tests.
    pub fn desk(levels: usize) -> Self {
        Self {
            mwdn: MwdnConfig {
                levels,
                ..Default::default()
            },
            inception: InceptionConfig {
                modules: 2,
                filters: 8,
                kernel_sizes: [9, 5, 3],
                bottleneck: 8,
                bn_momentum: 0.1,
                residual_every: 3,
            },
        }
    }
}

pub struct MwdnInception<T> {
    pub params: ParamSet<T>,
    pub profile: ModelProfile,
    pub seed: u64,
    cascade: MwdnCascade<T>,
    sub_models: Vec<InceptionTime<T>>,
    fusion: (ParamId, ParamId),
}

impl<T: Scalar> MwdnInception<T> {
    pub fn init(profile: &ModelProfile, seed: u64) -> Result<Self, ModelError> {
        profile.mwdn.validate()?;
        profile.inception.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        let cascade =
            MwdnCascade::init(&profile.mwdn, WINDOW_LEN, &mut params, "mwdn", &mut rng)?;
        let n_subs = profile.mwdn.levels + 1;
        let mut sub_models = Vec::with_capacity(n_subs);
        for s in 0..n_subs {
            sub_models.push(InceptionTime::init(
                &profile.inception,
                CHANNELS,
                &mut params,
                &format!("sub{s}"),
                &mut rng,
            )?);
        }
        let fused_in = n_subs * profile.inception.out_features();
        let limit = 1.0 / (fused_in as f64).sqrt();
        let fusion_w = Tensor::uniform(vec![HORIZON, fused_in], limit, &mut rng);
        let fusion_b = Tensor::uniform(vec![HORIZON], limit, &mut rng);
        let fusion = (
            params.register("fusion.weight", fusion_w),
            params.register("fusion.bias", fusion_b),
        );
        Ok(Self {
            params,
            profile: profile.clone(),
            seed,
            cascade,
            sub_models,
            fusion,
        })
    }

    pub fn cascade(&self) -> &MwdnCascade<T> {
        &self.cascade
    }

    /// Forward `[B,3,48]` to `[B,48]` on an existing tape.
    pub fn forward(
        &self,
        tape: &Tape<T>,
        vars: &[Var],
        input: Var,
        training: bool,
    ) -> Result<Var, ModelError> {
        let shape = tape.shape_of(input);
        if shape.len() != 3 || shape[1] != CHANNELS || shape[2] != WINDOW_LEN {
            return Err(ModelError::InvalidConfig(format!(
                "expected input [B,{CHANNELS},{WINDOW_LEN}], got {shape:?}"
            )));
        }
        let batch = shape[0];
        let load3 = tape.slice_axis1(input, 0, 1)?;
        let load = tape.reshape(load3, vec![batch, WINDOW_LEN])?;
        let time = tape.slice_axis1(input, 1, 2)?;

        let trace = self.cascade.forward(tape, vars, load)?;
        let levels = self.cascade.levels();
        let mut embeddings = Vec::with_capacity(trace.subs.len());
        for (s, (&sub, model)) in trace.subs.iter().zip(self.sub_models.iter()).enumerate() {
            // Sub s is the level-(s+1) detail, except the last, which is
            // the level-I approximation.
            let level = (s + 1).min(levels);
            let sub_len = tape.shape_of(sub)[1];
            let seq = tape.reshape(sub, vec![batch, 1, sub_len])?;
            let time_pooled = self.cascade.pool_channels_to_level(tape, time, level)?;
            let sub_input = tape.concat_axis1(&[seq, time_pooled])?;
            embeddings.push(model.embed(tape, vars, sub_input, training)?);
        }
        let fused = tape.concat_axis1(&embeddings)?;
        let (w, b) = self.fusion;
        Ok(tape.dense(fused, vars[w.index()], vars[b.index()])?)
    }

    /// Convenience forward for whole tensors (fresh tape per call).
    pub fn forward_tensors(
        &self,
        input: &Tensor<T>,
        training: bool,
    ) -> Result<Tensor<T>, ModelError> {
        let tape = Tape::new();
        let vars = self.params.bind(&tape);
        let x = tape.leaf(input.clone());
        let out = self.forward(&tape, &vars, x, training)?;
        Ok(tape.value(out))
    }

    /// Trainable parameters plus batch-norm buffers, flattened (f64).
    pub fn state_flat(&self) -> Vec<f64> {
        let mut out = self.params.flatten();
        for m in &self.sub_models {
            out.extend(m.buffers().iter().map(|v| v.as_f64()));
        }
        out
    }

    pub fn load_state_flat(&mut self, data: &[f64]) -> Result<(), ModelError> {
        let np = self.params.num_scalars();
        if data.len() < np {
            return Err(ModelError::InvalidConfig(format!(
                "checkpoint holds {} scalars, parameters alone need {np}",
                data.len()
            )));
        }
        self.params.load_flat(&data[..np])?;
        let mut at = np;
        for m in &self.sub_models {
            let buf: Vec<T> = data[at..].iter().map(|&v| T::c(v)).collect();
            at += m.load_buffers(&buf)?;
        }
        if at != data.len() {
            return Err(ModelError::InvalidConfig(format!(
                "checkpoint holds {} scalars, model consumed {at}",
                data.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 64,
            lr: 0.002,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean training MSE per epoch, standardized space.
    pub loss_curve: Vec<f64>,
}

fn gather_batch<T: Scalar>(
    ds: &WindowedDataset<T>,
    rows: &[usize],
) -> (Tensor<T>, Tensor<T>) {
    let b = rows.len();
    let mut x = Vec::with_capacity(b * CHANNELS * WINDOW_LEN);
    let mut y = Vec::with_capacity(b * HORIZON);
    for &r in rows {
        x.extend_from_slice(ds.input(r));
        y.extend_from_slice(ds.target(r));
    }
    (
        Tensor::new(vec![b, CHANNELS, WINDOW_LEN], x).unwrap(),
        Tensor::new(vec![b, HORIZON], y).unwrap(),
    )
}

/// Minimize MSE with Adam over a standardized training set.
///
/// Deterministic given `(dataset, config, seed)`: the seed drives only
/// the per-epoch batch shuffle.
pub fn train<T: Scalar>(
    model: &mut MwdnInception<T>,
    train_set: &WindowedDataset<T>,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainReport, ModelError> {
    if train_set.n() == 0 {
        return Err(ModelError::EmptyDataset);
    }
    if cfg.batch_size == 0 {
        return Err(ModelError::InvalidConfig("batch_size must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adam = AdamState::new(T::c(cfg.lr));
    let n = train_set.n();
    let mut order: Vec<usize> = (0..n).collect();
    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0f64;
        for (bi, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let (x, y) = gather_batch(train_set, chunk);
            let tape = Tape::new();
            let vars = model.params.bind(&tape);
            let xin = tape.leaf(x);
            let target = tape.leaf(y);
            let out = model.forward(&tape, &vars, xin, true)?;
            let loss = tape.mse_loss(out, target)?;
            let lval = tape.value(loss).data()[0].as_f64();
            if !lval.is_finite() {
                return Err(ModelError::NonFiniteLoss { epoch, batch: bi });
            }
            let grads = tape.backward(loss)?;
            model.params.zero_grads();
            model.params.accumulate_from(&vars, &grads);
            adam.step(&mut model.params);
            total += lval * chunk.len() as f64;
        }
        loss_curve.push(total / n as f64);
    }
    Ok(TrainReport { loss_curve })
}

/// A trained network plus the standardization that maps it back to
/// watts.
pub struct TrainedForecaster<T> {
    pub net: MwdnInception<T>,
    pub scaler: DatasetScaler<T>,
}

impl<T: Scalar> TrainedForecaster<T> {
    pub fn new(net: MwdnInception<T>, scaler: DatasetScaler<T>) -> Result<Self, ModelError> {
        for p in [&scaler.load, &scaler.hour, &scaler.day] {
            if !(p.std > T::zero()) || !p.std.is_finite() || !p.mean.is_finite() {
                return Err(ModelError::UnfittedStandardization);
            }
        }
        Ok(Self { net, scaler })
    }

    /// Standardize watt-space inputs, run the network in eval mode,
    /// and map the outputs back to watts.
    pub fn predict(&self, inputs: &Tensor<T>) -> Result<Tensor<T>, ModelError> {
        let shape = inputs.shape().to_vec();
        if shape.len() != 3 || shape[1] != CHANNELS || shape[2] != WINDOW_LEN {
            return Err(ModelError::InvalidConfig(format!(
                "expected input [B,{CHANNELS},{WINDOW_LEN}], got {shape:?}"
            )));
        }
        let mut std_in = inputs.clone();
        for b in 0..shape[0] {
            for c in 0..CHANNELS {
                let base = (b * CHANNELS + c) * WINDOW_LEN;
                let params = self.scaler.channel_params(c);
                params.apply_in_place(
                    &mut std_in.data_mut()[base..base + WINDOW_LEN],
                    Direction::Forward,
                );
            }
        }
        let mut out = self.net.forward_tensors(&std_in, false)?;
        self.scaler
            .load
            .apply_in_place(out.data_mut(), Direction::Inverse);
        Ok(out)
    }
}

impl<T: Scalar> WindowForecaster<T> for TrainedForecaster<T> {
    fn forecast(&self, inputs: &Tensor<T>) -> Result<Tensor<T>, ModelError> {
        self.predict(inputs)
    }

    fn kind(&self) -> ForecastModelKind {
        ForecastModelKind::MwdnInception
    }
}

/// Elementwise sum of per-mode watt forecasts.
pub fn sum_forecasts<T: Scalar>(parts: &[Tensor<T>]) -> Result<Tensor<T>, ModelError> {
    let first = parts.first().ok_or(ModelError::EmptyDataset)?;
    let mut out = first.clone();
    for p in &parts[1..] {
        if p.shape() != first.shape() {
            return Err(ModelError::InvalidConfig(format!(
                "forecast shapes differ: {:?} vs {:?}",
                p.shape(),
                first.shape()
            )));
        }
        for (o, &v) in out.data_mut().iter_mut().zip(p.data().iter()) {
            *o += v;
        }
    }
    Ok(out)
}

/// Deterministic per-mode seed: base seed plus the mode index.
pub fn imf_seed(base_seed: u64, imf_index: usize) -> u64 {
    base_seed.wrapping_add(imf_index as u64)
}

/// Tiny profile with under 1k parameters for exhaustive
/// finite-difference sweeps.
pub fn micro_profile() -> ModelProfile {
    ModelProfile {
        mwdn: MwdnConfig {
            levels: 1,
            noise_scale: 0.01,
            ..Default::default()
        },
        inception: InceptionConfig {
            modules: 1,
            filters: 1,
            kernel_sizes: [3, 3, 3],
            bottleneck: 0,
            bn_momentum: 0.1,
            residual_every: 0,
        },
    }
}

pub fn rand_inputs<T: Scalar>(batch: usize, rng: &mut impl Rng) -> Tensor<T> {
    Tensor::uniform(vec![batch, CHANNELS, WINDOW_LEN], 1.0, rng)
}
