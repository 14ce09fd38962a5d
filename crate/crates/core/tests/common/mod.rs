//! Shared test oracles: central finite differences against tape
//! gradients, and small numeric helpers.

use loadcast_core::autodiff::{Tape, Tensor, Var};

pub const FD_STEP: f64 = 1e-5;

/// Check every element of every leaf against a central difference.
///
/// Elements where both gradients are below `1e-4` in magnitude are only
/// required to agree absolutely (the FD estimate itself carries ~1e-10
/// of roundoff, so a relative test would be noise there).
pub fn finite_diff_check(
    name: &str,
    leaves: &[Tensor<f64>],
    tol: f64,
    build: impl Fn(&Tape<f64>, &[Var]) -> Var,
) {
    let analytic: Vec<Vec<f64>> = {
        let tape = Tape::new();
        let vars: Vec<Var> = leaves
            .iter()
            .map(|t| tape.leaf(t.clone().with_grad()))
            .collect();
        let loss = build(&tape, &vars);
        assert_eq!(tape.value(loss).len(), 1, "{name}: loss must be scalar");
        let grads = tape.backward(loss).unwrap();
        vars.iter()
            .map(|&v| grads.get(v).map(|g| g.to_vec()).unwrap_or_default())
            .collect()
    };

    let eval = |perturbed: &[Tensor<f64>]| -> f64 {
        let tape = Tape::new();
        let vars: Vec<Var> = perturbed.iter().map(|t| tape.leaf(t.clone())).collect();
        let loss = build(&tape, &vars);
        tape.value(loss).data()[0]
    };

    let mut work: Vec<Tensor<f64>> = leaves.to_vec();
    for (ti, grad) in analytic.iter().enumerate() {
        assert_eq!(
            grad.len(),
            leaves[ti].len(),
            "{name}: leaf {ti} missing gradient"
        );
        for ei in 0..grad.len() {
            let orig = work[ti].data()[ei];
            work[ti].data_mut()[ei] = orig + FD_STEP;
            let up = eval(&work);
            work[ti].data_mut()[ei] = orig - FD_STEP;
            let down = eval(&work);
            work[ti].data_mut()[ei] = orig;

            let fd = (up - down) / (2.0 * FD_STEP);
            let an = grad[ei];
            let mag = fd.abs().max(an.abs());
            if mag < 1e-4 {
                assert!(
                    (fd - an).abs() < 1e-6,
                    "{name}: leaf {ti}[{ei}] tiny-grad mismatch fd={fd} an={an}"
                );
            } else {
                let rel = (fd - an).abs() / mag;
                assert!(
                    rel < tol,
                    "{name}: leaf {ti}[{ei}] rel err {rel} (fd={fd}, an={an})"
                );
            }
        }
    }
}

pub fn seeded_tensor(
    shape: &[usize],
    lo: f64,
    hi: f64,
    rng: &mut impl rand::Rng,
) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}

/// Values bounded away from zero, for kinked ops.
pub fn seeded_tensor_away_from_zero(
    shape: &[usize],
    rng: &mut impl rand::Rng,
) -> Tensor<f64> {
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| {
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            sign * rng.gen_range(0.05..2.0)
        })
        .collect();
    Tensor::new(shape.to_vec(), data).unwrap()
}
