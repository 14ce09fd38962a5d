//! `loadcast`: decompose residential load profiles with VMD, train
//! per-mode wavelet-network forecasters, and evaluate against the
//! historical-mean baseline.

use clap::{Args, Parser, Subcommand};
use loadcast_core::container::{self, ContainerHeader};
use loadcast_core::data::{ingest_csv, resample_30min, CsvSchema};
use loadcast_core::metrics;
use loadcast_core::pipeline::{
    emit_plots, evaluate_baseline, run_pipeline, stationarity_csv,
    stationarity_table, sweep, sweep_csv, ExperimentConfig, KChoice, PipelineError, RunRecord,
};
use loadcast_core::stationarity::BatchOptions;
use loadcast_core::vmd::{vmd_decompose, InitMode, VmdConfig};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "loadcast",
    about = "Short-term multi-horizon residential load forecasting",
    version
)]
struct Cli {
    /// Experiment config file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config's base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CellArgs {
    /// Household id (CSV file stem); defaults to the first configured.
    #[arg(long)]
    household: Option<String>,
    /// Decomposition level: a positive K or `none`.
    #[arg(long, default_value = "none")]
    k: String,
    /// Wavelet decomposition depth I.
    #[arg(long, default_value_t = 4)]
    levels: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Read a load CSV and persist the windowed dataset container.
    Ingest {
        /// Input CSV with timestamp and power columns.
        input: PathBuf,
        /// Output container path.
        output: PathBuf,
        #[arg(long, default_value = "timestamp")]
        timestamp_col: String,
        #[arg(long, default_value = "power_w")]
        power_col: String,
    },
    /// VMD-decompose the longest gap-free stretch of a load CSV.
    Decompose {
        input: PathBuf,
        /// Output container path; a JSON sidecar lands next to it.
        output: PathBuf,
        #[arg(long, default_value_t = 7)]
        k: usize,
        #[arg(long, default_value_t = 1000.0)]
        alpha: f64,
        #[arg(long, default_value_t = 5e-6)]
        tol: f64,
        #[arg(long, default_value_t = 0.0)]
        tau: f64,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        #[arg(long, default_value = "timestamp")]
        timestamp_col: String,
        #[arg(long, default_value = "power_w")]
        power_col: String,
    },
    /// ADF/KPSS table over the configured decomposition levels.
    Stationarity {
        /// Household id; defaults to all configured households.
        #[arg(long)]
        household: Option<String>,
        /// Output CSV path (stdout when omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train the per-mode forecasters of one sweep cell.
    Train(CellArgs),
    /// Predict the test set of one trained cell.
    Forecast {
        #[command(flatten)]
        cell: CellArgs,
        /// Copy the watt-space forecast container here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Score a forecast container against an actuals container.
    Evaluate {
        forecast: PathBuf,
        actual: PathBuf,
        /// Reference RMSE for the forecast-skill metric.
        #[arg(long)]
        reference_rmse: Option<f64>,
    },
    /// Historical-mean baseline metrics on the test period.
    Baseline {
        #[arg(long)]
        household: Option<String>,
    },
    /// Full households x K x levels sweep with a consolidated CSV.
    Sweep,
    /// Write plot-data CSVs for previously produced run records.
    EmitPlots {
        /// Directory scanned recursively for record.json files;
        /// defaults to the config's output directory.
        #[arg(long)]
        runs: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, PipelineError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| PipelineError::Config("this command needs --config <file>".into()))?;
    let mut config = ExperimentConfig::from_toml_file(path)?;
    if let Some(seed) = cli.seed {
        config.base_seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out_dir = out.clone();
    }
    Ok(config)
}

fn household_index(config: &ExperimentConfig, id: &Option<String>) -> Result<usize, PipelineError> {
    match id {
        None => Ok(0),
        Some(want) => config
            .data
            .iter()
            .position(|p| {
                p.file_stem()
                    .map(|s| s.to_string_lossy() == want.as_str())
                    .unwrap_or(false)
            })
            .ok_or_else(|| {
                PipelineError::Config(format!("household `{want}` not in the config's data list"))
            }),
    }
}

fn parse_k(raw: &str) -> Result<KChoice, PipelineError> {
    if raw == "none" {
        return Ok(KChoice::None);
    }
    raw.parse::<usize>()
        .map(KChoice::K)
        .map_err(|_| PipelineError::Config(format!("bad --k value `{raw}` (positive K or none)")))
}

fn dispatch(cli: Cli) -> Result<(), PipelineError> {
    match &cli.command {
        Command::Ingest {
            input,
            output,
            timestamp_col,
            power_col,
        } => {
            let schema = CsvSchema {
                timestamp_col: timestamp_col.clone(),
                power_col: power_col.clone(),
            };
            let profile = ingest_csv(input, &schema)?;
            let rp = resample_30min(&profile)?;
            let ds = loadcast_core::data::build_windows(&rp)?;
            ds.save(output)?;
            println!(
                "{} rows -> {} windows -> {}",
                profile.timestamps.len(),
                ds.n(),
                output.display()
            );
            Ok(())
        }
        Command::Decompose {
            input,
            output,
            k,
            alpha,
            tol,
            tau,
            max_iters,
            timestamp_col,
            power_col,
        } => {
            let schema = CsvSchema {
                timestamp_col: timestamp_col.clone(),
                power_col: power_col.clone(),
            };
            let profile = ingest_csv(input, &schema)?;
            let rp = resample_30min(&profile)?;
            let (start, series) = longest_clean_run(&rp);
            let cfg = VmdConfig {
                modes: *k,
                alpha: *alpha,
                tol: *tol,
                tau: *tau,
                max_iters: *max_iters,
                init_mode: InitMode::AllZero,
            };
            let imfs = vmd_decompose(&series, &cfg)?;
            save_imfset(output, &imfs, &cfg, rp.bucket_time(start))?;
            println!(
                "decomposed {} buckets into {} modes + residue -> {}",
                series.len(),
                imfs.k(),
                output.display()
            );
            Ok(())
        }
        Command::Stationarity { household, output } => {
            let config = load_config(&cli)?;
            let mut rows = Vec::new();
            let indices: Vec<usize> = match household {
                Some(_) => vec![household_index(&config, household)?],
                None => (0..config.data.len()).collect(),
            };
            for idx in indices {
                rows.extend(stationarity_table(&config, idx, &BatchOptions::default())?);
            }
            let csv = stationarity_csv(&rows);
            match output {
                Some(path) => {
                    std::fs::write(path, csv)?;
                    println!("{} rows -> {}", rows.len(), path.display());
                }
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::Train(cell) => {
            let config = load_config(&cli)?;
            let idx = household_index(&config, &cell.household)?;
            let k = parse_k(&cell.k)?;
            let record = run_pipeline(&config, idx, k, cell.levels)?;
            println!(
                "trained {} models ({} resumed) -> {}",
                record.loss_curves.len(),
                record.resumed.len(),
                record.run_dir.display()
            );
            for (j, curve) in record.loss_curves.iter().enumerate() {
                let last = curve.last().copied().unwrap_or(f64::NAN);
                println!("  mode {j}: final training mse {last:.6}");
            }
            Ok(())
        }
        Command::Forecast { cell, output } => {
            let config = load_config(&cli)?;
            let idx = household_index(&config, &cell.household)?;
            let k = parse_k(&cell.k)?;
            let record = run_pipeline(&config, idx, k, cell.levels)?;
            if let Some(dst) = output {
                std::fs::copy(&record.forecast_path, dst)?;
                println!("forecast -> {}", dst.display());
            } else {
                println!("forecast -> {}", record.forecast_path.display());
            }
            println!(
                "test rmse {:.3} W, fs {:.2} %",
                record.metrics.rmse,
                record.metrics.fs.unwrap_or(f64::NAN)
            );
            Ok(())
        }
        Command::Evaluate {
            forecast,
            actual,
            reference_rmse,
        } => {
            let (fh, fdata) = container::read_container(forecast)?;
            let (ah, adata) = container::read_container(actual)?;
            if fh != ah {
                return Err(PipelineError::Config(format!(
                    "container headers differ: {fh:?} vs {ah:?}"
                )));
            }
            let report =
                metrics::evaluate(&adata, &fdata, fh.length as usize, *reference_rmse)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::Baseline { household } => {
            let config = load_config(&cli)?;
            let indices: Vec<usize> = match household {
                Some(_) => vec![household_index(&config, household)?],
                None => (0..config.data.len()).collect(),
            };
            println!("household,days,rmse_w,cv_pct,mape_pct");
            for idx in indices {
                let rp = loadcast_core::pipeline::load_household(&config, idx)?;
                let eval = evaluate_baseline(&rp, config.train_fraction)?;
                println!(
                    "{},{},{:.3},{:.3},{:.3}",
                    rp.household_id,
                    eval.days,
                    eval.report.rmse,
                    eval.report.cv,
                    eval.report.mape_pct
                );
            }
            Ok(())
        }
        Command::Sweep => {
            let config = load_config(&cli)?;
            let records = sweep(&config)?;
            print!("{}", sweep_csv(&records));
            println!(
                "# {} records under {}",
                records.len(),
                config.out_dir.join(config.hash()).display()
            );
            Ok(())
        }
        Command::EmitPlots { runs } => {
            let dir = match (runs, cli.config.as_ref()) {
                (Some(d), _) => d.clone(),
                (None, Some(_)) => {
                    let config = load_config(&cli)?;
                    config.out_dir.join(config.hash())
                }
                (None, None) => {
                    return Err(PipelineError::Config(
                        "emit-plots needs --runs <dir> or --config".into(),
                    ))
                }
            };
            let mut records = Vec::new();
            collect_records(&dir, &mut records)?;
            if records.is_empty() {
                return Err(PipelineError::Config(format!(
                    "no record.json found under {}",
                    dir.display()
                )));
            }
            let out = dir.join("plots");
            let written = emit_plots(&records, &out)?;
            for p in written {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

fn longest_clean_run(rp: &loadcast_core::data::ResampledProfile) -> (usize, Vec<f64>) {
    let mut best = (0usize, 0usize);
    let mut run_start = None;
    for b in 0..=rp.len() {
        let clean = b < rp.len() && !rp.gap_mask[b];
        match (clean, run_start) {
            (true, None) => run_start = Some(b),
            (false, Some(s)) => {
                if b - s > best.1 {
                    best = (s, b - s);
                }
                run_start = None;
            }
            _ => {}
        }
    }
    let (s, len) = best;
    (s, rp.power_w_30min[s..s + len].to_vec())
}

fn save_imfset(
    path: &Path,
    imfs: &loadcast_core::ImfSet,
    cfg: &VmdConfig<f64>,
    start_time: i64,
) -> Result<(), PipelineError> {
    let header = ContainerHeader {
        n: 1,
        channels: (imfs.k() + 1) as u32,
        length: imfs.len() as u32,
    };
    let mut blocks: Vec<&[f64]> = imfs.modes.iter().map(|m| m.as_slice()).collect();
    blocks.push(&imfs.residue);
    container::write_container(path, header, &blocks)?;
    let sidecar = serde_json::json!({
        "K": imfs.k(),
        "alpha": cfg.alpha,
        "tol": cfg.tol,
        "tau": cfg.tau,
        "center_freqs": imfs.center_freqs,
        "iterations_used": imfs.iterations_used,
        "final_delta": imfs.final_delta,
        "start_time": start_time,
    });
    let sidecar_path = path.with_extension("json");
    std::fs::write(&sidecar_path, serde_json::to_string_pretty(&sidecar)?)?;
    Ok(())
}

fn collect_records(dir: &Path, out: &mut Vec<RunRecord>) -> Result<(), PipelineError> {
    if !dir.is_dir() {
        return Ok(());
    }
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for path in entries {
        if path.is_dir() {
            collect_records(&path, out)?;
        } else if path.file_name().is_some_and(|n| n == "record.json") {
            let record: RunRecord = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
            out.push(record);
        }
    }
    Ok(())
}
