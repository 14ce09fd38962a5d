//! Variational mode decomposition: split a sequence into K band-limited
//! modes plus a residue by alternating Wiener-filter mode updates and
//! power-weighted center-frequency updates in the Fourier domain.

use crate::data::{WindowedDataset, WINDOW_LEN};
use crate::scalar::{FftScalar, Scalar};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VmdError {
    #[error("signal too short: {0} samples (need at least 2)")]
    TooShort(usize),
    #[error("signal contains non-finite values")]
    NonFinite,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("mode length {got} does not match {expected}")]
    LengthMismatch { got: usize, expected: usize },
}

/// Center-frequency initialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitMode {
    /// All center frequencies start at zero.
    AllZero,
    /// Evenly spread over [0, 0.5).
    Uniform,
    /// Seeded uniform draws, sorted ascending.
    Random { seed: u64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VmdConfig<T> {
    /// Mode count K.
    pub modes: usize,
    /// Bandwidth penalty.
    pub alpha: T,
    /// Convergence threshold on the summed relative spectral change.
    pub tol: T,
    /// Lagrangian ascent step; 0 leaves reconstruction slack to the residue.
    pub tau: T,
    pub max_iters: usize,
    pub init_mode: InitMode,
}

impl<T: Scalar> Default for VmdConfig<T> {
    fn default() -> Self {
        Self {
            modes: 7,
            alpha: T::c(1000.0),
            tol: T::c(5e-6),
            tau: T::zero(),
            max_iters: 500,
            init_mode: InitMode::AllZero,
        }
    }
}

impl<T: Scalar> VmdConfig<T> {
    pub fn validate(&self) -> Result<(), VmdError> {
        if self.modes < 1 {
            return Err(VmdError::InvalidConfig("modes must be >= 1".into()));
        }
        if self.alpha <= T::zero() {
            return Err(VmdError::InvalidConfig("alpha must be > 0".into()));
        }
        if self.tol <= T::zero() {
            return Err(VmdError::InvalidConfig("tol must be > 0".into()));
        }
        if self.max_iters < 1 {
            return Err(VmdError::InvalidConfig("max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

/// Decomposition result: K modes, a residue absorbing the remainder,
/// and the center frequency of each mode in cycles/sample.
#[derive(Debug, Clone)]
pub struct ImfSet<T> {
    pub modes: Vec<Vec<T>>,
    pub residue: Vec<T>,
    pub center_freqs: Vec<T>,
    pub iterations_used: usize,
    pub final_delta: T,
}

impl<T: Scalar> ImfSet<T> {
    pub fn len(&self) -> usize {
        self.residue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residue.is_empty()
    }

    pub fn k(&self) -> usize {
        self.modes.len()
    }

    /// Component `j`: mode `j` for `j < K`, the residue for `j == K`.
    pub fn component(&self, j: usize) -> &[T] {
        if j < self.modes.len() {
            &self.modes[j]
        } else {
            &self.residue
        }
    }
}

/// Decompose a real sequence into `config.modes` band-limited modes.
///
/// The signal is mirror-extended to twice its length before the FFT to
/// suppress edge ringing, and updates run on the non-negative half of
/// the spectrum only; time-domain modes come from conjugate-symmetric
/// inverse FFTs, so they are real by construction. Modes are returned
/// sorted by ascending center frequency, and the residue is defined as
/// `signal - sum(modes)`, which makes reconstruction exact.
pub fn vmd_decompose<T: FftScalar>(
    signal: &[T],
    config: &VmdConfig<T>,
) -> Result<ImfSet<T>, VmdError> {
    config.validate()?;
    let n = signal.len();
    if n < 2 {
        return Err(VmdError::TooShort(n));
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(VmdError::NonFinite);
    }
    let k = config.modes;
    if k > n / 2 {
        log::warn!(
            "VMD with K={k} on {n} samples exceeds the {} positive frequency bins; \
             expect degenerate near-zero modes",
            n / 2
        );
    }

    // Mirror extension: [reversed first half | signal | reversed second half].
    let mid = n.div_ceil(2);
    let big = 2 * n;
    let mut mirrored: Vec<Complex<T>> = Vec::with_capacity(big);
    mirrored.extend(signal[..mid].iter().rev().map(|&v| Complex::new(v, T::zero())));
    mirrored.extend(signal.iter().map(|&v| Complex::new(v, T::zero())));
    mirrored.extend(signal[mid..].iter().rev().map(|&v| Complex::new(v, T::zero())));

    let mut planner = FftPlanner::<T>::new();
    let fft = planner.plan_fft_forward(big);
    fft.process(&mut mirrored);

    // Keep the non-negative frequencies [0, 0.5); drop Nyquist and the
    // negative half. Bin i of `half` is frequency i/big cycles/sample.
    let half = big / 2;
    let f_hat: Vec<Complex<T>> = mirrored[..half].to_vec();
    let freqs: Vec<T> = (0..half)
        .map(|i| T::from_usize_(i) / T::from_usize_(big))
        .collect();

    let mut omega: Vec<T> = match config.init_mode {
        InitMode::AllZero => vec![T::zero(); k],
        InitMode::Uniform => (0..k)
            .map(|i| T::c(0.5) * T::from_usize_(i) / T::from_usize_(k))
            .collect(),
        InitMode::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut draws: Vec<T> = (0..k).map(|_| T::c(rng.gen_range(0.0..0.5))).collect();
            draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
            draws
        }
    };

    let zero = Complex::new(T::zero(), T::zero());
    let mut u_hat: Vec<Vec<Complex<T>>> = vec![vec![zero; half]; k];
    let mut lambda: Vec<Complex<T>> = vec![zero; half];
    let mut sum_all: Vec<Complex<T>> = vec![zero; half];

    let two_alpha = T::c(2.0) * config.alpha;
    let half_c = Complex::new(T::c(0.5), T::zero());
    let mut delta = T::infinity();
    let mut iterations_used = 0;

    let mut u_prev = u_hat.clone();
    for _ in 0..config.max_iters {
        for row in 0..k {
            u_prev[row].copy_from_slice(&u_hat[row]);
        }
        for i in 0..half {
            sum_all[i] = (0..k).fold(zero, |acc, j| acc + u_hat[j][i]);
        }
        // Gauss-Seidel over modes: each row update sees the rows before
        // it already refreshed.
        for row in 0..k {
            let w = omega[row];
            let mut num = T::zero();
            let mut den = T::zero();
            for i in 0..half {
                let others = sum_all[i] - u_hat[row][i];
                let numerator = f_hat[i] - others + lambda[i] * half_c;
                let df = freqs[i] - w;
                let gain = T::one() + two_alpha * df * df;
                let updated = numerator / Complex::new(gain, T::zero());
                sum_all[i] += updated - u_hat[row][i];
                u_hat[row][i] = updated;
                let p = updated.norm_sqr();
                num += freqs[i] * p;
                den += p;
            }
            if den > T::zero() {
                omega[row] = (num / den).max(T::zero()).min(T::c(0.5));
            }
        }

        if config.tau != T::zero() {
            for i in 0..half {
                lambda[i] += (f_hat[i] - sum_all[i]) * Complex::new(config.tau, T::zero());
            }
        }

        iterations_used += 1;
        delta = T::zero();
        for row in 0..k {
            let mut diff = T::zero();
            let mut norm = T::zero();
            for i in 0..half {
                diff += (u_hat[row][i] - u_prev[row][i]).norm_sqr();
                norm += u_prev[row][i].norm_sqr();
            }
            if norm > T::zero() {
                delta += diff / norm;
            } else if diff > T::zero() {
                delta += T::infinity();
            }
        }
        if delta < config.tol {
            break;
        }
    }

    // Conjugate-symmetric inverse FFT per mode, then crop the mirror.
    let ifft = planner.plan_fft_inverse(big);
    let scale = T::one() / T::from_usize_(big);
    let mut modes: Vec<Vec<T>> = Vec::with_capacity(k);
    let mut spectrum = vec![zero; big];
    for row in 0..k {
        spectrum.fill(zero);
        spectrum[0] = u_hat[row][0];
        for i in 1..half {
            spectrum[i] = u_hat[row][i];
            spectrum[big - i] = u_hat[row][i].conj();
        }
        ifft.process(&mut spectrum);
        modes.push(spectrum[mid..mid + n].iter().map(|c| c.re * scale).collect());
    }

    // Stable sort by center frequency so mode j means the same band
    // across calls.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| omega[a].partial_cmp(&omega[b]).unwrap());
    let modes: Vec<Vec<T>> = order.iter().map(|&i| std::mem::take(&mut modes[i])).collect();
    let center_freqs: Vec<T> = order.iter().map(|&i| omega[i]).collect();

    let mut residue = signal.to_vec();
    for m in &modes {
        for (r, &v) in residue.iter_mut().zip(m.iter()) {
            *r -= v;
        }
    }

    Ok(ImfSet {
        modes,
        residue,
        center_freqs,
        iterations_used,
        final_delta: delta,
    })
}

/// Sum of modes plus residue.
pub fn vmd_reconstruct<T: Scalar>(imfs: &ImfSet<T>) -> Result<Vec<T>, VmdError> {
    let n = imfs.residue.len();
    let mut out = imfs.residue.clone();
    for m in &imfs.modes {
        if m.len() != n {
            return Err(VmdError::LengthMismatch {
                got: m.len(),
                expected: n,
            });
        }
        for (o, &v) in out.iter_mut().zip(m.iter()) {
            *o += v;
        }
    }
    Ok(out)
}

/// Decomposition scope for datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecomposeScope {
    /// Each 48-sample input and target sequence decomposed on its own.
    PerWindow,
    /// The underlying bucket series decomposed once per contiguous run,
    /// windows sliced from the decomposed runs.
    WholeSeries,
}

/// Split a windowed dataset into K+1 datasets, one per mode plus one
/// for the residue. Channel 0 and the targets carry component `j`;
/// the time channels are copied unchanged. Summing channel 0 (or the
/// targets) across the K+1 outputs recovers the originals exactly.
pub fn decompose_dataset<T: FftScalar>(
    ds: &WindowedDataset<T>,
    config: &VmdConfig<T>,
    scope: DecomposeScope,
) -> Result<Vec<WindowedDataset<T>>, VmdError> {
    config.validate()?;
    let k = config.modes;
    let n = ds.n();
    let mut outputs: Vec<WindowedDataset<T>> = (0..=k)
        .map(|_| WindowedDataset {
            inputs: ds.inputs.clone(),
            targets: ds.targets.clone(),
            window_start_times: ds.window_start_times.clone(),
        })
        .collect();

    match scope {
        DecomposeScope::PerWindow => {
            // Unit-stride windows repeat the same 48-sample segments as
            // inputs and targets; decompose each distinct segment once.
            let mut memo: HashMap<Vec<u64>, usize> = HashMap::new();
            let mut jobs: Vec<Vec<T>> = Vec::new();
            let slot = |seg: &[T], memo: &mut HashMap<Vec<u64>, usize>, jobs: &mut Vec<Vec<T>>| {
                let key: Vec<u64> = seg.iter().map(|v| v.as_f64().to_bits()).collect();
                *memo.entry(key).or_insert_with(|| {
                    jobs.push(seg.to_vec());
                    jobs.len() - 1
                })
            };
            let mut input_slot = Vec::with_capacity(n);
            let mut target_slot = Vec::with_capacity(n);
            for i in 0..n {
                input_slot.push(slot(ds.channel(i, 0), &mut memo, &mut jobs));
                target_slot.push(slot(ds.target(i), &mut memo, &mut jobs));
            }
            let decomposed: Vec<ImfSet<T>> = jobs
                .par_iter()
                .map(|seg| vmd_decompose(seg, config))
                .collect::<Result<_, _>>()?;
            for i in 0..n {
                let din = &decomposed[input_slot[i]];
                let dtg = &decomposed[target_slot[i]];
                for (j, out) in outputs.iter_mut().enumerate() {
                    out.channel_mut(i, 0).copy_from_slice(din.component(j));
                    out.target_mut(i).copy_from_slice(dtg.component(j));
                }
            }
        }
        DecomposeScope::WholeSeries => {
            let runs = bucket_runs(ds);
            let decomposed: Vec<(i64, ImfSet<T>)> = runs
                .par_iter()
                .map(|(t0, series)| vmd_decompose(series, config).map(|d| (*t0, d)))
                .collect::<Result<_, _>>()?;
            let step = crate::data::BUCKET_SECONDS;
            for i in 0..n {
                let t0 = ds.window_start_times[i];
                let (run_t0, d) = decomposed
                    .iter()
                    .find(|(rt, d)| {
                        *rt <= t0 && t0 + (2 * WINDOW_LEN as i64) * step <= *rt + d.len() as i64 * step
                    })
                    .expect("window lies inside a contiguous bucket run");
                let off = ((t0 - run_t0) / step) as usize;
                for (j, out) in outputs.iter_mut().enumerate() {
                    let comp = d.component(j);
                    out.channel_mut(i, 0)
                        .copy_from_slice(&comp[off..off + WINDOW_LEN]);
                    out.target_mut(i)
                        .copy_from_slice(&comp[off + WINDOW_LEN..off + 2 * WINDOW_LEN]);
                }
            }
        }
    }
    Ok(outputs)
}

/// Reassemble the contiguous bucket runs a windowed dataset was cut
/// from, as (start_time, 96-or-longer series) pairs.
fn bucket_runs<T: Scalar>(ds: &WindowedDataset<T>) -> Vec<(i64, Vec<T>)> {
    let step = crate::data::BUCKET_SECONDS;
    let mut runs: Vec<(i64, Vec<T>)> = Vec::new();
    for i in 0..ds.n() {
        let t0 = ds.window_start_times[i];
        let contiguous = runs
            .last()
            .map(|(rt, vals)| t0 == *rt + (vals.len() as i64 - 2 * WINDOW_LEN as i64 + 1) * step)
            .unwrap_or(false);
        if contiguous {
            let (_, vals) = runs.last_mut().unwrap();
            // A unit-stride step adds exactly one new bucket at the end.
            vals.push(ds.target(i)[WINDOW_LEN - 1]);
        } else {
            let mut vals = Vec::with_capacity(2 * WINDOW_LEN);
            vals.extend_from_slice(ds.channel(i, 0));
            vals.extend_from_slice(ds.target(i));
            runs.push((t0, vals));
        }
    }
    runs
}

/// Fraction of total squared amplitude carried by each component of a
/// decomposed dataset family's channel 0.
pub fn channel_energy_shares<T: Scalar>(datasets: &[WindowedDataset<T>]) -> Vec<f64> {
    let energies: Vec<f64> = datasets
        .iter()
        .map(|ds| {
            (0..ds.n())
                .flat_map(|i| ds.channel(i, 0).iter())
                .map(|v| v.as_f64() * v.as_f64())
                .sum()
        })
        .collect();
    let total: f64 = energies.iter().sum();
    if total <= 0.0 {
        return vec![0.0; energies.len()];
    }
    energies.iter().map(|e| e / total).collect()
}
