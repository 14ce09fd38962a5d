//! Central-finite-difference checks for every tape operation, plus
//! randomized shape-law fuzzing.

mod common;

use common::{finite_diff_check, seeded_tensor, seeded_tensor_away_from_zero};
use loadcast_core::autodiff::{BnStats, Padding, Tape, Tensor, Var};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SMOOTH_TOL: f64 = 1e-6;
const KINKED_TOL: f64 = 1e-4;
const CONFIGS: usize = 20;

/// Reduce any tensor to a scalar in a gradient-spreading way: sum of
/// elements weighted by a fixed irrational-ish ramp, so no symmetry
/// hides sign errors.
fn spread_loss(tape: &Tape<f64>, v: Var) -> Var {
    let n = tape.value(v).len();
    let shape = tape.shape_of(v);
    let ramp: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.7391 + 0.31).sin() + 1.5).collect();
    let w = tape.leaf(Tensor::new(shape, ramp).unwrap());
    let prod = tape.mul(v, w).unwrap();
    let flat = tape.reshape(prod, vec![1, n]).unwrap();
    let m = tape.mean_last_axis(flat).unwrap();
    tape.reshape(m, vec![1]).unwrap()
}

#[test]
fn conv1d_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for cfg in 0..CONFIGS {
        let b = rng.gen_range(1..3usize);
        let c = rng.gen_range(1..4usize);
        let l = rng.gen_range(5..12usize);
        let f = rng.gen_range(1..4usize);
        let w = rng.gen_range(1..=l.min(7));
        let stride = rng.gen_range(1..3usize);
        let padding = if rng.gen_bool(0.5) { Padding::Same } else { Padding::None };
        let input = seeded_tensor(&[b, c, l], -2.0, 2.0, &mut rng);
        let kernel = seeded_tensor(&[f, c, w], -1.0, 1.0, &mut rng);
        let bias = seeded_tensor(&[f], -1.0, 1.0, &mut rng);
        finite_diff_check(
            &format!("conv1d cfg {cfg}"),
            &[input, kernel, bias],
            SMOOTH_TOL,
            |tape, vars| {
                let y = tape.conv1d(vars[0], vars[1], vars[2], stride, padding).unwrap();
                spread_loss(tape, y)
            },
        );
    }
}

#[test]
fn dense_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for cfg in 0..CONFIGS {
        let b = rng.gen_range(1..5usize);
        let fin = rng.gen_range(1..8usize);
        let fout = rng.gen_range(1..8usize);
        let input = seeded_tensor(&[b, fin], -2.0, 2.0, &mut rng);
        let weight = seeded_tensor(&[fout, fin], -1.0, 1.0, &mut rng);
        let bias = seeded_tensor(&[fout], -1.0, 1.0, &mut rng);
        finite_diff_check(
            &format!("dense cfg {cfg}"),
            &[input, weight, bias],
            SMOOTH_TOL,
            |tape, vars| {
                let y = tape.dense(vars[0], vars[1], vars[2]).unwrap();
                spread_loss(tape, y)
            },
        );
    }
}

#[test]
fn activation_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for cfg in 0..CONFIGS {
        let n = rng.gen_range(1..24usize);
        let x = seeded_tensor_away_from_zero(&[n], &mut rng);
        finite_diff_check(&format!("relu cfg {cfg}"), &[x], KINKED_TOL, |tape, vars| {
            let y = tape.relu(vars[0]);
            spread_loss(tape, y)
        });
        let x = seeded_tensor(&[n], -3.0, 3.0, &mut rng);
        finite_diff_check(&format!("sigmoid cfg {cfg}"), &[x], SMOOTH_TOL, |tape, vars| {
            let y = tape.sigmoid(vars[0]);
            spread_loss(tape, y)
        });
    }
}

#[test]
fn pooling_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for cfg in 0..CONFIGS {
        let b = rng.gen_range(1..3usize);
        let c = rng.gen_range(1..3usize);
        let l = rng.gen_range(4..12usize);
        let k = rng.gen_range(1..=l.min(4));
        let stride = rng.gen_range(1..3usize);
        let padding = if rng.gen_bool(0.5) { Padding::Same } else { Padding::None };
        let x = seeded_tensor(&[b, c, l], -2.0, 2.0, &mut rng);
        finite_diff_check(
            &format!("avg_pool cfg {cfg}"),
            &[x.clone()],
            SMOOTH_TOL,
            |tape, vars| {
                let y = tape.avg_pool1d(vars[0], k, stride, padding).unwrap();
                spread_loss(tape, y)
            },
        );
        finite_diff_check(
            &format!("max_pool cfg {cfg}"),
            &[x],
            KINKED_TOL,
            |tape, vars| {
                let y = tape.max_pool1d(vars[0], k, stride, padding).unwrap();
                spread_loss(tape, y)
            },
        );
    }
}

#[test]
fn batch_norm_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    for cfg in 0..CONFIGS {
        let b = rng.gen_range(2..4usize);
        let c = rng.gen_range(1..4usize);
        let l = rng.gen_range(2..8usize);
        let x = seeded_tensor(&[b, c, l], -2.0, 2.0, &mut rng);
        let gamma = seeded_tensor(&[c], 0.5, 1.5, &mut rng);
        let beta = seeded_tensor(&[c], -0.5, 0.5, &mut rng);
        let training = cfg % 2 == 0;
        let stats = BnStats {
            mean: (0..c).map(|_| rng.gen_range(-0.5..0.5)).collect(),
            var: (0..c).map(|_| rng.gen_range(0.5..1.5)).collect(),
        };
        finite_diff_check(
            &format!("batch_norm train={training} cfg {cfg}"),
            &[x, gamma, beta],
            SMOOTH_TOL,
            |tape, vars| {
                let mut local = stats.clone();
                let y = tape
                    .batch_norm1d(vars[0], vars[1], vars[2], &mut local, 0.1, training)
                    .unwrap();
                spread_loss(tape, y)
            },
        );
    }
}

#[test]
fn mse_and_elementwise_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    for cfg in 0..CONFIGS {
        let n = rng.gen_range(1..16usize);
        let p = seeded_tensor(&[n], -2.0, 2.0, &mut rng);
        let t = seeded_tensor(&[n], -2.0, 2.0, &mut rng);
        finite_diff_check(&format!("mse cfg {cfg}"), &[p, t], SMOOTH_TOL, |tape, vars| {
            tape.mse_loss(vars[0], vars[1]).unwrap()
        });

        let a = seeded_tensor(&[n], -2.0, 2.0, &mut rng);
        let b = seeded_tensor(&[n], -2.0, 2.0, &mut rng);
        finite_diff_check(
            &format!("add/sub/mul/scale cfg {cfg}"),
            &[a, b],
            SMOOTH_TOL,
            |tape, vars| {
                let s = tape.add(vars[0], vars[1]).unwrap();
                let d = tape.sub(s, vars[1]).unwrap();
                let m = tape.mul(d, vars[0]).unwrap();
                let sc = tape.scale(m, 0.37);
                spread_loss(tape, sc)
            },
        );
    }
}

#[test]
fn structural_op_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    for cfg in 0..CONFIGS {
        let b = rng.gen_range(1..3usize);
        let c1 = rng.gen_range(1..3usize);
        let c2 = rng.gen_range(1..3usize);
        let l = rng.gen_range(2..6usize);
        let x = seeded_tensor(&[b, c1, l], -2.0, 2.0, &mut rng);
        let y = seeded_tensor(&[b, c2, l], -2.0, 2.0, &mut rng);
        let left = rng.gen_range(0..3usize);
        let right = rng.gen_range(0..3usize);
        finite_diff_check(
            &format!("concat/slice/pad/mean cfg {cfg}"),
            &[x, y],
            SMOOTH_TOL,
            |tape, vars| {
                let cat = tape.concat_axis1(&[vars[0], vars[1]]).unwrap();
                let sl = tape.slice_axis1(cat, 0, c1 + c2).unwrap();
                let padded = tape.pad_last_axis(sl, left, right).unwrap();
                let gap = tape.mean_last_axis(padded).unwrap();
                spread_loss(tape, gap)
            },
        );
    }
}

#[test]
fn deep_composite_graph_gradients() {
    // A conv -> bn -> relu -> pool -> dense chain with a residual add,
    // exercising accumulation across shared inputs.
    let mut rng = ChaCha8Rng::seed_from_u64(48);
    for cfg in 0..5 {
        let b = 2;
        let (c, l, f) = (2, 10, 3);
        let input = seeded_tensor(&[b, c, l], -1.5, 1.5, &mut rng);
        let k1 = seeded_tensor(&[f, c, 3], -0.8, 0.8, &mut rng);
        let b1 = seeded_tensor(&[f], -0.2, 0.2, &mut rng);
        let gamma = seeded_tensor(&[f], 0.8, 1.2, &mut rng);
        let beta = seeded_tensor(&[f], -0.2, 0.2, &mut rng);
        let w = seeded_tensor(&[4, f], -0.8, 0.8, &mut rng);
        let wb = seeded_tensor(&[4], -0.2, 0.2, &mut rng);
        finite_diff_check(
            &format!("composite cfg {cfg}"),
            &[input, k1, b1, gamma, beta, w, wb],
            KINKED_TOL,
            |tape, vars| {
                let mut stats = BnStats::new(f);
                let conv = tape.conv1d(vars[0], vars[1], vars[2], 1, Padding::Same).unwrap();
                let bn = tape
                    .batch_norm1d(conv, vars[3], vars[4], &mut stats, 0.1, true)
                    .unwrap();
                let act = tape.relu(bn);
                let res = tape.add(act, bn).unwrap();
                let pooled = tape.mean_last_axis(res).unwrap();
                let out = tape.dense(pooled, vars[5], vars[6]).unwrap();
                spread_loss(tape, out)
            },
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conv_output_length_law(
        b in 1usize..3, c in 1usize..3, l in 1usize..32,
        f in 1usize..3, w in 1usize..16, stride in 1usize..4,
    ) {
        prop_assume!(w <= l);
        let tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::zeros(vec![b, c, l]));
        let k = tape.leaf(Tensor::zeros(vec![f, c, w]));
        let bias = tape.leaf(Tensor::zeros(vec![f]));
        let y = tape.conv1d(x, k, bias, stride, Padding::None).unwrap();
        prop_assert_eq!(tape.shape_of(y), vec![b, f, (l - w) / stride + 1]);

        let y2 = tape.conv1d(x, k, bias, 1, Padding::Same).unwrap();
        prop_assert_eq!(tape.shape_of(y2), vec![b, f, l]);
    }

    #[test]
    fn pool_output_length_law(
        b in 1usize..3, c in 1usize..3, l in 1usize..32,
        k in 1usize..6, stride in 1usize..4,
    ) {
        prop_assume!(k <= l);
        let tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::zeros(vec![b, c, l]));
        let y = tape.avg_pool1d(x, k, stride, Padding::None).unwrap();
        prop_assert_eq!(tape.shape_of(y), vec![b, c, (l - k) / stride + 1]);
        let m = tape.max_pool1d(x, k, 1, Padding::Same).unwrap();
        prop_assert_eq!(tape.shape_of(m), vec![b, c, l]);
    }

    #[test]
    fn dense_and_gap_shape_laws(
        b in 1usize..4, fin in 1usize..8, fout in 1usize..8, l in 1usize..8,
    ) {
        let tape = Tape::<f64>::new();
        let x = tape.leaf(Tensor::zeros(vec![b, fin]));
        let w = tape.leaf(Tensor::zeros(vec![fout, fin]));
        let bias = tape.leaf(Tensor::zeros(vec![fout]));
        let y = tape.dense(x, w, bias).unwrap();
        prop_assert_eq!(tape.shape_of(y), vec![b, fout]);

        let t3 = tape.leaf(Tensor::zeros(vec![b, fin, l]));
        let g = tape.mean_last_axis(t3).unwrap();
        prop_assert_eq!(tape.shape_of(g), vec![b, fin]);
    }
}
