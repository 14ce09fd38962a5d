//! Plot-data emission: CSV series any plotting tool can render.

use super::run::RunRecord;
use super::PipelineError;
use crate::container;
use std::path::{Path, PathBuf};

fn cell_name(r: &RunRecord) -> String {
    format!("{}_k{}_I{}", r.household, r.k.label(), r.levels)
}

/// Bar data: one row per record per metric.
pub fn bars_csv(records: &[RunRecord]) -> String {
    let mut out = String::from("household,K,I,metric,value\n");
    for r in records {
        for (metric, value) in [
            ("rmse", r.metrics.rmse),
            ("fs", r.metrics.fs.unwrap_or(f64::NAN)),
            ("cv", r.metrics.cv),
            ("mape", r.metrics.mape_pct),
        ] {
            out.push_str(&format!(
                "{},{},{},{metric},{value:.6}\n",
                r.household,
                r.k.label(),
                r.levels
            ));
        }
    }
    out
}

/// Actual-vs-forecast overlay of one test instance.
pub fn overlay_csv(record: &RunRecord, instance: usize) -> Result<String, PipelineError> {
    let (fh, fdata) = container::read_container(&record.forecast_path)?;
    let (_, adata) = container::read_container(&record.actual_path)?;
    let h = fh.length as usize;
    let n = fh.n as usize;
    if instance >= n {
        return Err(PipelineError::Config(format!(
            "instance {instance} out of {n} test windows"
        )));
    }
    let mut out = String::from("t,actual,forecast,error\n");
    for t in 0..h {
        let f = fdata[instance * h + t];
        let a = adata[instance * h + t];
        out.push_str(&format!("{t},{a:.6},{f:.6},{:.6}\n", a - f));
    }
    Ok(out)
}

/// Per-horizon box summaries, absolute and signed.
pub fn horizons_csv(record: &RunRecord) -> String {
    let mut out = String::from(
        "horizon,abs_median,abs_q1,abs_q3,abs_lo_whisker,abs_hi_whisker,abs_outliers,\
         signed_median,signed_q1,signed_q3,signed_lo_whisker,signed_hi_whisker,signed_outliers,signed_mean\n",
    );
    for h in &record.metrics.per_horizon {
        let a = &h.abs_error;
        let s = &h.signed_error;
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{},{:.6},{:.6},{:.6},{:.6},{:.6},{},{:.6}\n",
            h.horizon,
            a.median,
            a.q1,
            a.q3,
            a.lo_whisker,
            a.hi_whisker,
            a.outliers,
            s.median,
            s.q1,
            s.q3,
            s.lo_whisker,
            s.hi_whisker,
            s.outliers,
            s.mean,
        ));
    }
    out
}

/// Write the full set of plot files for a batch of records.
pub fn emit_plots(records: &[RunRecord], out_dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let bars = out_dir.join("bars.csv");
    std::fs::write(&bars, bars_csv(records))?;
    written.push(bars);

    for r in records {
        let overlay = out_dir.join(format!("overlay_{}.csv", cell_name(r)));
        std::fs::write(&overlay, overlay_csv(r, 0)?)?;
        written.push(overlay);

        let horizons = out_dir.join(format!("horizons_{}.csv", cell_name(r)));
        std::fs::write(&horizons, horizons_csv(r))?;
        written.push(horizons);
    }
    Ok(written)
}
