//! CSV ingestion for raw load profiles.

use super::{DataError, LoadProfile};
use chrono::{DateTime, NaiveDateTime};
use std::path::Path;

/// Column mapping for input CSVs.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub timestamp_col: String,
    pub power_col: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            timestamp_col: "timestamp".to_string(),
            power_col: "power_w".to_string(),
        }
    }
}

/// Parse an epoch-seconds or ISO-8601 timestamp.
fn parse_timestamp(raw: &str) -> Option<i64> {
    let raw = raw.trim();
    if let Ok(v) = raw.parse::<i64>() {
        return Some(v);
    }
    if let Ok(v) = raw.parse::<f64>() {
        if v.is_finite() {
            return Some(v.floor() as i64);
        }
        return None;
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    None
}

/// Read a load profile from a CSV file with a header row.
///
/// Rows must be sorted by timestamp; power must be finite and
/// non-negative. The household id is the file stem.
pub fn ingest_csv(path: &Path, schema: &CsvSchema) -> Result<LoadProfile, DataError> {
    let path_str = path.display().to_string();
    let malformed = |line: u64, msg: String| DataError::MalformedRow {
        path: path_str.clone(),
        line,
        msg,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| malformed(1, e.to_string()))?;

    let headers = reader
        .headers()
        .map_err(|e| malformed(1, e.to_string()))?
        .clone();
    let ts_idx = headers
        .iter()
        .position(|h| h == schema.timestamp_col)
        .ok_or_else(|| malformed(1, format!("missing column `{}`", schema.timestamp_col)))?;
    let pw_idx = headers
        .iter()
        .position(|h| h == schema.power_col)
        .ok_or_else(|| malformed(1, format!("missing column `{}`", schema.power_col)))?;

    let mut timestamps = Vec::new();
    let mut power_w = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            malformed(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let ts_raw = record
            .get(ts_idx)
            .ok_or_else(|| malformed(line, "missing timestamp field".into()))?;
        let pw_raw = record
            .get(pw_idx)
            .ok_or_else(|| malformed(line, "missing power field".into()))?;

        let ts = parse_timestamp(ts_raw)
            .ok_or_else(|| malformed(line, format!("unparseable timestamp `{ts_raw}`")))?;
        let pw: f64 = pw_raw
            .parse()
            .map_err(|_| malformed(line, format!("unparseable power `{pw_raw}`")))?;
        if !pw.is_finite() || pw < 0.0 {
            return Err(malformed(line, format!("power {pw} not finite and >= 0")));
        }
        if let Some(&prev) = timestamps.last() {
            if ts <= prev {
                return Err(DataError::NonMonotonic {
                    path: path_str,
                    line,
                });
            }
        }
        timestamps.push(ts);
        power_w.push(pw);
    }

    if timestamps.is_empty() {
        return Err(DataError::NoDataRows { path: path_str });
    }

    let source_period_s = median_spacing(&timestamps);
    let household_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "unknown".to_string());

    Ok(LoadProfile {
        household_id,
        timestamps,
        power_w,
        source_period_s,
    })
}

fn median_spacing(timestamps: &[i64]) -> f64 {
    if timestamps.len() < 2 {
        return 0.0;
    }
    let mut diffs: Vec<i64> = timestamps.windows(2).map(|w| w[1] - w[0]).collect();
    diffs.sort_unstable();
    diffs[diffs.len() / 2] as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(contents: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("house1.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        (dir, path)
    }

    #[test]
    fn two_row_read_through() {
        let (_d, path) = write_csv("timestamp,power_w\n0,100\n5,120\n");
        let p = ingest_csv(&path, &CsvSchema::default()).unwrap();
        assert_eq!(p.timestamps, vec![0, 5]);
        assert_eq!(p.power_w, vec![100.0, 120.0]);
        assert_eq!(p.source_period_s, 5.0);
        assert_eq!(p.household_id, "house1");
    }

    #[test]
    fn empty_file_is_no_data_rows() {
        let (_d, path) = write_csv("timestamp,power_w\n");
        match ingest_csv(&path, &CsvSchema::default()) {
            Err(DataError::NoDataRows { .. }) => {}
            other => panic!("expected NoDataRows, got {other:?}"),
        }
    }

    #[test]
    fn out_of_order_rows_rejected() {
        let (_d, path) = write_csv("timestamp,power_w\n10,100\n5,120\n");
        match ingest_csv(&path, &CsvSchema::default()) {
            Err(DataError::NonMonotonic { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected NonMonotonic, got {other:?}"),
        }
    }

    #[test]
    fn reports_line_of_malformed_row() {
        let (_d, path) = write_csv("timestamp,power_w\n0,100\n5,watts\n");
        match ingest_csv(&path, &CsvSchema::default()) {
            Err(DataError::MalformedRow { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected MalformedRow, got {other:?}"),
        }
    }

    #[test]
    fn negative_and_nonfinite_power_rejected() {
        let (_d, path) = write_csv("timestamp,power_w\n0,-5\n");
        assert!(matches!(
            ingest_csv(&path, &CsvSchema::default()),
            Err(DataError::MalformedRow { .. })
        ));
        let (_d, path) = write_csv("timestamp,power_w\n0,NaN\n");
        assert!(matches!(
            ingest_csv(&path, &CsvSchema::default()),
            Err(DataError::MalformedRow { .. })
        ));
    }

    #[test]
    fn iso8601_timestamps_autodetected() {
        let (_d, path) = write_csv(
            "timestamp,power_w\n2020-10-01T00:00:00,100\n2020-10-01T00:00:05,120\n",
        );
        let p = ingest_csv(&path, &CsvSchema::default()).unwrap();
        assert_eq!(p.timestamps[0], 1_601_510_400);
        assert_eq!(p.timestamps[1] - p.timestamps[0], 5);
    }

    #[test]
    fn custom_column_names() {
        let (_d, path) = write_csv("t,p\n0,1\n5,2\n");
        let schema = CsvSchema {
            timestamp_col: "t".into(),
            power_col: "p".into(),
        };
        let p = ingest_csv(&path, &schema).unwrap();
        assert_eq!(p.power_w, vec![1.0, 2.0]);
    }
}
