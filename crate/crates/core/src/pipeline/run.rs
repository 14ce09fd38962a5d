//! Pipeline orchestration: ingest, resample, window, split, decompose,
//! per-mode training with checkpoint/resume, prediction, summation,
//! and evaluation against the historical-mean reference.

use super::config::{ExperimentConfig, KChoice, ProfileChoice};
use super::PipelineError;
use crate::container::{self, ContainerHeader};
use crate::data::{
    build_windows, chrono_split, ingest_csv, resample_30min, DatasetScaler, ResampledProfile,
    WindowedDataset, BUCKET_SECONDS, SECONDS_PER_DAY, STEPS_PER_DAY, WINDOW_LEN,
};
use crate::metrics::{self, MetricsReport};
use crate::models::{
    historical_mean_forecast, imf_seed, sum_forecasts, train, ForecastModelKind, ModelProfile,
    MwdnInception, TrainedForecaster, HORIZON,
};
use crate::stationarity::{batch_stationarity, BatchOptions};
use crate::vmd::{channel_energy_shares, decompose_dataset};
use crate::autodiff::Tensor;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub household: String,
    pub k: KChoice,
    pub levels: usize,
    pub base_seed: u64,
    pub profile: ProfileChoice,
    pub stage_seconds: Vec<(String, f64)>,
    pub metrics: MetricsReport,
    pub baseline_rmse: f64,
    pub baseline_days: usize,
    pub per_imf_energy: Vec<f64>,
    pub loss_curves: Vec<Vec<f64>>,
    /// Mode indices restored from checkpoints instead of trained.
    pub resumed: Vec<usize>,
    pub run_dir: PathBuf,
    pub forecast_path: PathBuf,
    pub actual_path: PathBuf,
}

/// Ingest and resample one configured household.
pub fn load_household(
    config: &ExperimentConfig,
    idx: usize,
) -> Result<ResampledProfile, PipelineError> {
    let path = config
        .data
        .get(idx)
        .ok_or_else(|| PipelineError::Config(format!("household index {idx} out of range")))?;
    let profile = ingest_csv(path, &config.schema())?;
    Ok(resample_30min(&profile)?)
}

/// Historical-mean evaluation over the day-aligned days of the test
/// period.
pub struct BaselineEval {
    pub report: MetricsReport,
    pub days: usize,
    pub actual: Vec<f64>,
    pub forecast: Vec<f64>,
    pub day_starts: Vec<i64>,
}

pub fn evaluate_baseline(
    rp: &ResampledProfile,
    train_fraction: f64,
) -> Result<BaselineEval, PipelineError> {
    let ds = build_windows(rp)?;
    let (_, test) = chrono_split(&ds, train_fraction)?;
    // Targets of the test windows start one day after the first test
    // window's input start.
    let first_target = test.window_start_times[0] + (WINDOW_LEN as i64) * BUCKET_SECONDS;
    let end_time = rp.start_time + rp.len() as i64 * BUCKET_SECONDS;

    let mut actual = Vec::new();
    let mut forecast = Vec::new();
    let mut day_starts = Vec::new();
    let mut day = first_target.div_euclid(SECONDS_PER_DAY) * SECONDS_PER_DAY;
    if day < first_target {
        day += SECONDS_PER_DAY;
    }
    while day + SECONDS_PER_DAY <= end_time {
        if let Ok(fc) = historical_mean_forecast(rp, day) {
            let b0 = ((day - rp.start_time) / BUCKET_SECONDS) as usize;
            if rp.gap_mask[b0..b0 + STEPS_PER_DAY].iter().all(|&m| !m) {
                actual.extend_from_slice(&rp.power_w_30min[b0..b0 + STEPS_PER_DAY]);
                forecast.extend(fc);
                day_starts.push(day);
            }
        }
        day += SECONDS_PER_DAY;
    }
    if day_starts.is_empty() {
        return Err(PipelineError::Config(format!(
            "household {}: no test-period day has {} days of clean history",
            rp.household_id,
            crate::models::HISTORY_DAYS
        )));
    }
    let report = metrics::evaluate(&actual, &forecast, STEPS_PER_DAY, None)?;
    Ok(BaselineEval {
        days: day_starts.len(),
        report,
        actual,
        forecast,
        day_starts,
    })
}

fn model_profile(config: &ExperimentConfig, levels: usize) -> ModelProfile {
    match config.profile {
        ProfileChoice::PaperExact => ModelProfile::paper(levels),
        ProfileChoice::DeskScale => ModelProfile::desk(levels),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointManifest {
    kind: ForecastModelKind,
    config_hash: String,
    seed: u64,
    epochs: usize,
    levels: usize,
    imf_index: usize,
    scaler: DatasetScaler<f64>,
    loss_curve: Vec<f64>,
    param_manifest: Vec<(String, Vec<usize>)>,
}

fn checkpoint_paths(run_dir: &Path, j: usize) -> (PathBuf, PathBuf) {
    (
        run_dir.join(format!("imf{j}.json")),
        run_dir.join(format!("imf{j}.lcw")),
    )
}

/// Train one per-mode model, or restore it from a finished checkpoint
/// with a matching config hash.
#[allow(clippy::too_many_arguments)]
fn train_or_load(
    run_dir: &Path,
    j: usize,
    config: &ExperimentConfig,
    levels: usize,
    train_std: &WindowedDataset<f64>,
    scaler: DatasetScaler<f64>,
    seed: u64,
) -> Result<(TrainedForecaster<f64>, Vec<f64>, bool), PipelineError> {
    let (manifest_path, weights_path) = checkpoint_paths(run_dir, j);
    let hash = config.hash();
    if manifest_path.exists() && weights_path.exists() {
        let manifest: CheckpointManifest =
            serde_json::from_str(&std::fs::read_to_string(&manifest_path)?)?;
        if manifest.config_hash == hash
            && manifest.seed == seed
            && manifest.epochs == config.epochs
            && manifest.levels == levels
        {
            let (header, data) = container::read_container(&weights_path)?;
            let mut net = MwdnInception::init(&model_profile(config, levels), seed)?;
            container::expect_len(&weights_path, &data, header.length as usize)?;
            net.load_state_flat(&data)?;
            let fc = TrainedForecaster::new(net, manifest.scaler)?;
            return Ok((fc, manifest.loss_curve, true));
        }
    }

    let mut net = MwdnInception::init(&model_profile(config, levels), seed)?;
    let report = train(&mut net, train_std, &config.train_config(), seed)?;
    let state = net.state_flat();
    // Write weights then manifest; a missing manifest marks an
    // unfinished checkpoint on resume.
    container::write_container(
        &weights_path,
        ContainerHeader {
            n: 1,
            channels: 1,
            length: state.len() as u32,
        },
        &[&state],
    )?;
    let manifest = CheckpointManifest {
        kind: ForecastModelKind::MwdnInception,
        config_hash: hash,
        seed,
        epochs: config.epochs,
        levels,
        imf_index: j,
        scaler: scaler.clone(),
        loss_curve: report.loss_curve.clone(),
        param_manifest: net.params.manifest(),
    };
    let tmp = manifest_path.with_extension("json.tmp");
    std::fs::write(&tmp, serde_json::to_string_pretty(&manifest)?)?;
    std::fs::rename(&tmp, &manifest_path)?;
    let fc = TrainedForecaster::new(net, scaler)?;
    Ok((fc, report.loss_curve, false))
}

pub fn run_dir_for(
    config: &ExperimentConfig,
    household: &str,
    k: KChoice,
    levels: usize,
) -> PathBuf {
    config
        .out_dir
        .join(config.hash())
        .join(format!("{household}_k{}_I{levels}", k.label()))
}

fn dataset_tensor(ds: &WindowedDataset<f64>) -> Tensor<f64> {
    Tensor::new(
        vec![ds.n(), crate::data::CHANNELS, WINDOW_LEN],
        ds.inputs.clone(),
    )
    .expect("dataset inputs are dense")
}

/// Execute the full pipeline for one (household, K, levels) cell.
pub fn run_pipeline(
    config: &ExperimentConfig,
    household_idx: usize,
    k: KChoice,
    levels: usize,
) -> Result<RunRecord, PipelineError> {
    let mut stage_seconds = Vec::new();
    let stage = |stages: &mut Vec<(String, f64)>, name: &str, t0: Instant| {
        stages.push((name.to_string(), t0.elapsed().as_secs_f64()));
    };

    let t0 = Instant::now();
    let rp = load_household(config, household_idx)?;
    let household = rp.household_id.clone();
    stage(&mut stage_seconds, "ingest+resample", t0);

    let t0 = Instant::now();
    let ds = build_windows(&rp)?;
    let (train_ds, test_ds) = chrono_split(&ds, config.train_fraction)?;
    stage(&mut stage_seconds, "window+split", t0);

    let t0 = Instant::now();
    let baseline = evaluate_baseline(&rp, config.train_fraction)?;
    stage(&mut stage_seconds, "baseline", t0);

    let t0 = Instant::now();
    let (train_parts, test_parts) = match k {
        KChoice::None => (vec![train_ds.clone()], vec![test_ds.clone()]),
        KChoice::K(k) => {
            let vmd_cfg = config.vmd_config(k)?;
            let scope = config.scope()?;
            (
                decompose_dataset(&train_ds, &vmd_cfg, scope)?,
                decompose_dataset(&test_ds, &vmd_cfg, scope)?,
            )
        }
    };
    let per_imf_energy = channel_energy_shares(&train_parts);
    stage(&mut stage_seconds, "decompose", t0);

    let run_dir = run_dir_for(config, &household, k, levels);
    std::fs::create_dir_all(&run_dir)?;

    let t0 = Instant::now();
    let jobs: Vec<usize> = (0..train_parts.len()).collect();
    let run_job = |&j: &usize| -> Result<(TrainedForecaster<f64>, Vec<f64>, bool), PipelineError> {
        let scaler = DatasetScaler::fit(&train_parts[j]);
        let train_std = scaler.transform(&train_parts[j], crate::data::Direction::Forward);
        train_or_load(
            &run_dir,
            j,
            config,
            levels,
            &train_std,
            scaler,
            imf_seed(config.base_seed, j),
        )
    };
    let trained: Vec<(TrainedForecaster<f64>, Vec<f64>, bool)> = if config.workers == 1 {
        jobs.iter().map(run_job).collect::<Result<_, _>>()?
    } else {
        jobs.par_iter().map(run_job).collect::<Result<_, _>>()?
    };
    stage(&mut stage_seconds, "train", t0);

    let t0 = Instant::now();
    let parts: Vec<Tensor<f64>> = trained
        .iter()
        .zip(test_parts.iter())
        .map(|((fc, _, _), test_j)| fc.predict(&dataset_tensor(test_j)))
        .collect::<Result<_, _>>()?;
    let summed = sum_forecasts(&parts)?;
    stage(&mut stage_seconds, "predict+sum", t0);

    let t0 = Instant::now();
    let report = metrics::evaluate(
        &test_ds.targets,
        summed.data(),
        HORIZON,
        Some(baseline.report.rmse),
    )?;
    stage(&mut stage_seconds, "evaluate", t0);

    let forecast_path = run_dir.join("forecast.lcw");
    let actual_path = run_dir.join("actual.lcw");
    let header = ContainerHeader {
        n: test_ds.n() as u32,
        channels: 1,
        length: HORIZON as u32,
    };
    container::write_container(&forecast_path, header, &[summed.data()])?;
    container::write_container(&actual_path, header, &[&test_ds.targets])?;

    let record = RunRecord {
        config_hash: config.hash(),
        household,
        k,
        levels,
        base_seed: config.base_seed,
        profile: config.profile,
        stage_seconds,
        metrics: report,
        baseline_rmse: baseline.report.rmse,
        baseline_days: baseline.days,
        per_imf_energy,
        loss_curves: trained.iter().map(|(_, c, _)| c.clone()).collect(),
        resumed: trained
            .iter()
            .enumerate()
            .filter_map(|(j, (_, _, loaded))| loaded.then_some(j))
            .collect(),
        run_dir: run_dir.clone(),
        forecast_path,
        actual_path,
    };
    std::fs::write(
        run_dir.join("record.json"),
        serde_json::to_string_pretty(&record)?,
    )?;
    Ok(record)
}

/// Cartesian product over households x K list x level list.
pub fn sweep(config: &ExperimentConfig) -> Result<Vec<RunRecord>, PipelineError> {
    let mut records = Vec::new();
    for h in 0..config.data.len() {
        for &k in &config.k_list {
            for &levels in &config.mwdn_levels {
                records.push(run_pipeline(config, h, k, levels)?);
            }
        }
    }
    let csv_path = config.out_dir.join(config.hash()).join("sweep.csv");
    std::fs::create_dir_all(csv_path.parent().unwrap())?;
    std::fs::write(&csv_path, sweep_csv(&records))?;
    Ok(records)
}

/// Consolidated metric table: one row per run record.
pub fn sweep_csv(records: &[RunRecord]) -> String {
    let mut out = String::from("household,model,K,I,rmse,fs,cv,mape\n");
    for r in records {
        let model = match r.profile {
            ProfileChoice::PaperExact => "mwdn-inception-paper",
            ProfileChoice::DeskScale => "mwdn-inception-desk",
        };
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6}\n",
            r.household,
            model,
            r.k.label(),
            r.levels,
            r.metrics.rmse,
            r.metrics.fs.unwrap_or(f64::NAN),
            r.metrics.cv,
            r.metrics.mape_pct,
        ));
    }
    out
}

/// One row of the stationarity table CSV.
#[derive(Debug, Clone, Serialize)]
pub struct StationarityRow {
    pub household: String,
    pub decomposition: String,
    pub test: String,
    pub p_value: f64,
    pub statistic: f64,
    pub critical_value: f64,
}

/// Run ADF and KPSS over the windowed inputs for each configured
/// decomposition level, mirroring the reference table's layout.
pub fn stationarity_table(
    config: &ExperimentConfig,
    household_idx: usize,
    options: &BatchOptions,
) -> Result<Vec<StationarityRow>, PipelineError> {
    let rp = load_household(config, household_idx)?;
    let ds = build_windows(&rp)?;
    let mut rows = Vec::new();
    for &k in &config.k_list {
        let (label, parts) = match k {
            KChoice::None => ("no decomposition".to_string(), vec![ds.clone()]),
            KChoice::K(kk) => {
                let vmd_cfg = config.vmd_config(kk)?;
                (
                    format!("{kk}IMFs + Res."),
                    decompose_dataset(&ds, &vmd_cfg, config.scope()?)?,
                )
            }
        };
        let report = batch_stationarity(&parts, options)?;
        rows.push(StationarityRow {
            household: rp.household_id.clone(),
            decomposition: label.clone(),
            test: "ADF".into(),
            p_value: mean_of(&report.per_imf, |r| r.adf.mean_p_value),
            statistic: report.mean_adf_statistic,
            critical_value: report.mean_adf_critical,
        });
        rows.push(StationarityRow {
            household: rp.household_id.clone(),
            decomposition: label,
            test: "KPSS".into(),
            p_value: mean_of(&report.per_imf, |r| r.kpss.mean_p_value),
            statistic: report.mean_kpss_statistic,
            critical_value: report.mean_kpss_critical,
        });
    }
    Ok(rows)
}

fn mean_of<T>(items: &[T], f: impl Fn(&T) -> f64) -> f64 {
    items.iter().map(f).sum::<f64>() / items.len().max(1) as f64
}

pub fn stationarity_csv(rows: &[StationarityRow]) -> String {
    let mut out = String::from("household,decomposition,test,p_value,statistic,critical_value\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.6},{:.6},{:.6}\n",
            r.household, r.decomposition, r.test, r.p_value, r.statistic, r.critical_value
        ));
    }
    out
}
