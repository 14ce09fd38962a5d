//! Scratch diagnostics (deleted before ship).
use loadcast_core::data::build_windows;
use loadcast_core::pipeline::synth::{synth_resampled, SynthSpec};
use loadcast_core::stationarity::{batch_stationarity, AdfRegression, BatchOptions, Verdict};
use loadcast_core::vmd::{decompose_dataset, DecomposeScope, VmdConfig};

#[test]
#[ignore]
fn probe_criterion6() {
    let spec = SynthSpec { days: 6, ..Default::default() };
    let rp = synth_resampled(&spec, "probe");
    let ds = build_windows(&rp).unwrap();
    println!("windows: {}", ds.n());
    let cfg = VmdConfig { modes: 31, ..Default::default() };
    let parts = decompose_dataset(&ds, &cfg, DecomposeScope::PerWindow).unwrap();
    for (name, reg, lag) in [
        ("nc lag9", AdfRegression::NoConstant, None),
        ("nc lag2", AdfRegression::NoConstant, Some(2)),
        ("nc lag0", AdfRegression::NoConstant, Some(0)),
        ("c lag2", AdfRegression::Constant, Some(2)),
    ] {
        let opts = BatchOptions { adf_regression: reg, adf_max_lag: lag, ..Default::default() };
        let report = batch_stationarity(&parts, &opts).unwrap();
        let rejecting = report.per_imf.iter().filter(|r| r.adf.verdict == Verdict::Reject).count();
        let kpss_ftr = report.per_imf.iter().filter(|r| r.kpss.verdict == Verdict::FailToReject).count();
        println!(
            "{name}: ADF reject {}/{} (mean stat {:.3} vs crit {:.3}); KPSS fail-to-reject {}/{} ; mean reject_frac {:.2}",
            rejecting, report.per_imf.len(), report.mean_adf_statistic, report.mean_adf_critical,
            kpss_ftr, report.per_imf.len(),
            report.per_imf.iter().map(|r| r.adf.reject_fraction).sum::<f64>() / report.per_imf.len() as f64,
        );
    }
}

#[test]
#[ignore]
fn probe_criterion7() {
    use loadcast_core::pipeline::{run_pipeline, ExperimentConfig, KChoice};
    use loadcast_core::pipeline::synth::{write_synth_csv, SynthSpec};
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("house.csv");
    write_synth_csv(&SynthSpec { days: 28, ..Default::default() }, &csv, 900).unwrap();
    for seed in [1u64, 2, 3] {
        let toml = format!(
            "data = [{csv:?}]\nk_list = [\"none\", \"7\"]\nmwdn_levels = [2]\nepochs = 6\n\
             batch_size = 64\nbase_seed = {seed}\nout_dir = {out:?}\n",
            out = dir.path().join(format!("runs{seed}")),
        );
        let cfg_path = dir.path().join("exp.toml");
        std::fs::write(&cfg_path, toml).unwrap();
        let config = ExperimentConfig::from_toml_file(&cfg_path).unwrap();
        let t0 = std::time::Instant::now();
        let none = run_pipeline(&config, 0, KChoice::None, 2).unwrap();
        let k7 = run_pipeline(&config, 0, KChoice::K(7), 2).unwrap();
        println!(
            "seed {seed}: rmse none {:.3} vs k7 {:.3} ({:.1}s; fs {:.1} vs {:.1})",
            none.metrics.rmse, k7.metrics.rmse, t0.elapsed().as_secs_f64(),
            none.metrics.fs.unwrap(), k7.metrics.fs.unwrap(),
        );
    }
}

#[test]
#[ignore]
fn probe_criterion3_runtime() {
    use loadcast_core::vmd::{vmd_decompose, vmd_reconstruct, VmdConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rayon::prelude::*;
    for k in [1usize, 7, 31] {
        let t0 = std::time::Instant::now();
        let cfg = VmdConfig::<f64> { modes: k, ..Default::default() };
        let max_err: f64 = (0..1000u64)
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let signal: Vec<f64> = (0..48).map(|_| rng.gen_range(-400.0..400.0)).collect();
                let d = vmd_decompose(&signal, &cfg).unwrap();
                let back = vmd_reconstruct(&d).unwrap();
                let linf = signal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                signal
                    .iter()
                    .zip(back.iter())
                    .map(|(a, b)| (a - b).abs() / linf)
                    .fold(0.0f64, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        println!("K={k}: {:.1}s, max rel err {max_err:.2e}", t0.elapsed().as_secs_f64());
    }
}
