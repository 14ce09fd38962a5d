//! End-to-end finite-difference checks of the composed forecaster.
//!
//! A sub-1k-parameter composite (cascade, two InceptionTime sub-models,
//! fusion dense) is swept exhaustively; the desk-scale model is checked
//! on a random subsample of coordinates per tensor.

mod common;

use common::FD_STEP;
use loadcast_core::autodiff::{ParamSet, Tape, Tensor, Var};
use loadcast_core::data::{CHANNELS, WINDOW_LEN};
use loadcast_core::models::{
    InceptionConfig, InceptionTime, ModelProfile, MwdnCascade, MwdnConfig, MwdnInception,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-4;

fn check_coord(fd: f64, an: f64, what: &str) {
    let mag = fd.abs().max(an.abs());
    if mag < 1e-4 {
        assert!((fd - an).abs() < 1e-6, "{what}: fd={fd} an={an}");
    } else {
        let rel = (fd - an).abs() / mag;
        assert!(rel < TOL, "{what}: rel {rel} (fd={fd}, an={an})");
    }
}

/// Sweep selected coordinates of every parameter tensor against central
/// differences of the loss as a function of that parameter.
fn fd_sweep_params(
    params: &mut ParamSet<f64>,
    loss_of: impl Fn(&ParamSet<f64>) -> f64,
    grads_of: impl Fn(&ParamSet<f64>) -> Vec<Vec<f64>>,
    coords_per_tensor: Option<usize>,
    seed: u64,
    what: &str,
) {
    let analytic = grads_of(params);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_tensors = params.len();
    for ti in 0..n_tensors {
        let len = analytic[ti].len();
        let coords: Vec<usize> = match coords_per_tensor {
            None => (0..len).collect(),
            Some(k) => (0..k.min(len)).map(|_| rng.gen_range(0..len)).collect(),
        };
        for ei in coords {
            let entry = params.iter_mut().nth(ti).unwrap();
            let orig = entry.tensor.data()[ei];
            entry.tensor.data_mut()[ei] = orig + FD_STEP;
            let up = loss_of(params);
            let entry = params.iter_mut().nth(ti).unwrap();
            entry.tensor.data_mut()[ei] = orig - FD_STEP;
            let down = loss_of(params);
            let entry = params.iter_mut().nth(ti).unwrap();
            entry.tensor.data_mut()[ei] = orig;

            let fd = (up - down) / (2.0 * FD_STEP);
            check_coord(fd, analytic[ti][ei], &format!("{what} tensor {ti}[{ei}]"));
        }
    }
}

struct MicroModel {
    params: ParamSet<f64>,
    cascade: MwdnCascade<f64>,
    subs: Vec<InceptionTime<f64>>,
    fusion_w: loadcast_core::autodiff::ParamId,
    fusion_b: loadcast_core::autodiff::ParamId,
    seq_len: usize,
    horizon: usize,
}

/// Composite model on a short sequence so every parameter can be swept.
fn micro_model(seq_len: usize, horizon: usize, seed: u64) -> MicroModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParamSet::new();
    let mwdn_cfg = MwdnConfig {
        levels: 1,
        wavelet: "db4".into(),
        noise_scale: 0.01,
        test_linear_mode: false,
        pool: loadcast_core::models::PoolVariant::Halving,
    };
    let cascade = MwdnCascade::init(&mwdn_cfg, seq_len, &mut params, "m", &mut rng).unwrap();
    let icfg = InceptionConfig {
        modules: 1,
        filters: 1,
        kernel_sizes: [3, 3, 3],
        bottleneck: 0,
        bn_momentum: 0.1,
        residual_every: 0,
    };
    let subs: Vec<InceptionTime<f64>> = (0..2)
        .map(|s| {
            InceptionTime::init(&icfg, CHANNELS, &mut params, &format!("s{s}"), &mut rng).unwrap()
        })
        .collect();
    let fused_in = 2 * icfg.out_features();
    let fusion_w = params.register(
        "fusion.w",
        Tensor::uniform(vec![horizon, fused_in], 0.5, &mut rng),
    );
    let fusion_b = params.register("fusion.b", Tensor::uniform(vec![horizon], 0.5, &mut rng));
    MicroModel {
        params,
        cascade,
        subs,
        fusion_w,
        fusion_b,
        seq_len,
        horizon,
    }
}

impl MicroModel {
    fn loss(&self, params: &ParamSet<f64>, x: &Tensor<f64>, y: &Tensor<f64>) -> (f64, Tape<f64>, Vec<Var>, Var) {
        let tape = Tape::new();
        let vars = params.bind(&tape);
        let batch = x.shape()[0];
        let xin = tape.leaf(x.clone());
        let load3 = tape.slice_axis1(xin, 0, 1).unwrap();
        let load = tape.reshape(load3, vec![batch, self.seq_len]).unwrap();
        let time = tape.slice_axis1(xin, 1, 2).unwrap();
        let trace = self.cascade.forward(&tape, &vars, load).unwrap();
        let mut embs = Vec::new();
        for (s, (&sub, model)) in trace.subs.iter().zip(self.subs.iter()).enumerate() {
            let level = (s + 1).min(self.cascade.levels());
            let sub_len = tape.shape_of(sub)[1];
            let seq = tape.reshape(sub, vec![batch, 1, sub_len]).unwrap();
            let tp = self
                .cascade
                .pool_channels_to_level(&tape, time, level)
                .unwrap();
            let cat = tape.concat_axis1(&[seq, tp]).unwrap();
            embs.push(model.embed(&tape, &vars, cat, true).unwrap());
        }
        let fused = tape.concat_axis1(&embs).unwrap();
        let out = tape
            .dense(fused, vars[self.fusion_w.index()], vars[self.fusion_b.index()])
            .unwrap();
        let target = tape.leaf(y.clone());
        let loss = tape.mse_loss(out, target).unwrap();
        let lval = tape.value(loss).data()[0];
        (lval, tape, vars, loss)
    }
}

#[test]
fn micro_model_full_parameter_sweep() {
    for seed in [1u64, 2, 3] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed * 100 + 9);
        let mm = micro_model(16, 8, seed);
        assert!(
            mm.params.num_scalars() <= 1000,
            "micro model too large: {}",
            mm.params.num_scalars()
        );
        let x = Tensor::uniform(vec![2, CHANNELS, mm.seq_len], 1.0, &mut rng);
        let y = Tensor::uniform(vec![2, mm.horizon], 1.0, &mut rng);

        let loss_of = |params: &ParamSet<f64>| mm.loss(params, &x, &y).0;
        let grads_of = |params: &ParamSet<f64>| {
            let (_, tape, vars, loss) = mm.loss(params, &x, &y);
            let g = tape.backward(loss).unwrap();
            vars.iter()
                .map(|&v| g.get(v).map(|s| s.to_vec()).unwrap_or_default())
                .collect()
        };
        let mut params = mm.params.clone();
        fd_sweep_params(
            &mut params,
            loss_of,
            grads_of,
            None,
            seed,
            &format!("micro seed {seed}"),
        );
    }
}

#[test]
fn desk_model_subsampled_sweep() {
    for seed in [11u64, 12] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = MwdnInception::<f64>::init(&ModelProfile::desk(2), seed).unwrap();
        let x = Tensor::uniform(vec![2, CHANNELS, WINDOW_LEN], 1.0, &mut rng);
        let y = Tensor::uniform(vec![2, loadcast_core::models::HORIZON], 1.0, &mut rng);

        let loss_of = |params: &ParamSet<f64>| {
            let tape = Tape::new();
            let vars = params.bind(&tape);
            let xin = tape.leaf(x.clone());
            let out = model.forward(&tape, &vars, xin, true).unwrap();
            let target = tape.leaf(y.clone());
            let loss = tape.mse_loss(out, target).unwrap();
            tape.value(loss).data()[0]
        };
        let grads_of = |params: &ParamSet<f64>| {
            let tape = Tape::new();
            let vars = params.bind(&tape);
            let xin = tape.leaf(x.clone());
            let out = model.forward(&tape, &vars, xin, true).unwrap();
            let target = tape.leaf(y.clone());
            let loss = tape.mse_loss(out, target).unwrap();
            let g = tape.backward(loss).unwrap();
            vars.iter()
                .map(|&v| g.get(v).map(|s| s.to_vec()).unwrap_or_default())
                .collect()
        };
        let mut params = model.params.clone();
        fd_sweep_params(
            &mut params,
            loss_of,
            grads_of,
            Some(4),
            seed,
            &format!("desk seed {seed}"),
        );
    }
}
