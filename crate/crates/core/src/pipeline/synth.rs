//! Synthetic household generator: daily periodicity, two embedded
//! tones, weekend scaling, and noise. Used by tests and as demo data
//! for the CLI when no real acquisition is at hand.

use crate::data::{day_of_week, LoadProfile, ResampledProfile, BUCKET_SECONDS, STEPS_PER_DAY};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub days: usize,
    pub base_w: f64,
    pub daily_amp: f64,
    /// First embedded tone, period in 30-minute steps.
    pub tone1_period: f64,
    pub tone1_amp: f64,
    /// Second embedded tone, period in 30-minute steps.
    pub tone2_period: f64,
    pub tone2_amp: f64,
    pub noise_w: f64,
    /// Multiplier applied on Saturdays and Sundays.
    pub weekend_scale: f64,
    pub seed: u64,
    pub start_time: i64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            days: 30,
            base_w: 200.0,
            daily_amp: 80.0,
            tone1_period: 7.3,
            tone1_amp: 25.0,
            tone2_period: 3.1,
            tone2_amp: 15.0,
            noise_w: 8.0,
            weekend_scale: 1.15,
            seed: 0,
            start_time: 0,
        }
    }
}

/// One value per 30-minute bucket.
pub fn synth_series(spec: &SynthSpec) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.days * STEPS_PER_DAY;
    (0..n)
        .map(|b| {
            let t = b as f64;
            let tod = (b % STEPS_PER_DAY) as f64 / STEPS_PER_DAY as f64;
            let sec = spec.start_time + b as i64 * BUCKET_SECONDS;
            let weekend = day_of_week(sec) >= 5;
            let daily = spec.daily_amp
                * (0.6 * (TAU * tod - 0.8 * TAU).sin() + 0.4 * (2.0 * TAU * tod).cos());
            let tones = spec.tone1_amp * (TAU * t / spec.tone1_period).sin()
                + spec.tone2_amp * (TAU * t / spec.tone2_period).cos();
            let noise = spec.noise_w * rng.gen_range(-1.0..1.0);
            let scale = if weekend { spec.weekend_scale } else { 1.0 };
            (scale * (spec.base_w + daily) + tones + noise).max(0.0)
        })
        .collect()
}

pub fn synth_resampled(spec: &SynthSpec, household_id: &str) -> ResampledProfile {
    let power = synth_series(spec);
    let n = power.len();
    ResampledProfile {
        household_id: household_id.to_string(),
        start_time: spec.start_time,
        power_w_30min: power,
        gap_mask: vec![false; n],
    }
}

/// Raw-rate profile: several samples per bucket with small jitter, so
/// ingest and resampling have real work to do.
pub fn synth_profile(spec: &SynthSpec, household_id: &str, source_period_s: i64) -> LoadProfile {
    let buckets = synth_series(spec);
    let per_bucket = (BUCKET_SECONDS / source_period_s).max(1) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed);
    let mut timestamps = Vec::with_capacity(buckets.len() * per_bucket);
    let mut power_w = Vec::with_capacity(buckets.len() * per_bucket);
    for (b, &w) in buckets.iter().enumerate() {
        for s in 0..per_bucket {
            timestamps.push(spec.start_time + b as i64 * BUCKET_SECONDS + s as i64 * source_period_s);
            power_w.push((w + rng.gen_range(-0.5..0.5)).max(0.0));
        }
    }
    LoadProfile {
        household_id: household_id.to_string(),
        timestamps,
        power_w,
        source_period_s: source_period_s as f64,
    }
}

/// Write a raw-rate synthetic household to CSV.
pub fn write_synth_csv(spec: &SynthSpec, path: &Path, source_period_s: i64) -> std::io::Result<()> {
    let profile = synth_profile(spec, "synth", source_period_s);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "timestamp,power_w")?;
    for (&t, &p) in profile.timestamps.iter().zip(profile.power_w.iter()) {
        writeln!(f, "{t},{p:.3}")?;
    }
    f.flush()
}
