//! CSV reports.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! values always produce equal bytes.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use clickcast_core::eval::{Method, RunReport};
use clickcast_core::grpo::IterationStats;

use crate::error::{io_err, Error, Result};
use crate::jsonl::write_atomic;

/// One row of `metrics.csv`: a method evaluated with one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub method: String,
    pub seed: u64,
    pub mae: f64,
    pub rmse: f64,
    pub mae_scaled: f64,
    pub rmse_scaled: f64,
    pub samples: usize,
    pub config_fingerprint: String,
}

/// One row of `table.csv`: mean and sample std across seeds, scaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub method: String,
    pub seeds: usize,
    pub mae_mean: f64,
    pub mae_std: Option<f64>,
    pub rmse_mean: f64,
    pub rmse_std: Option<f64>,
    pub scale: f64,
    pub samples: usize,
    pub config_fingerprint: String,
}

pub fn metric_rows(reports: &[RunReport]) -> Vec<MetricRow> {
    let mut rows = Vec::new();
    for r in reports {
        for (i, &seed) in r.seeds.iter().enumerate() {
            rows.push(MetricRow {
                method: r.method.as_str().to_string(),
                seed,
                mae: r.mae[i],
                rmse: r.rmse[i],
                mae_scaled: r.mae[i] * r.scale,
                rmse_scaled: r.rmse[i] * r.scale,
                samples: r.sample_count,
                config_fingerprint: r.config_fingerprint.clone(),
            });
        }
    }
    rows
}

pub fn table_rows(reports: &[RunReport]) -> Vec<TableRow> {
    reports
        .iter()
        .map(|r| {
            let (mm, ms) = r.mae_summary();
            let (rm, rs) = r.rmse_summary();
            TableRow {
                method: r.method.as_str().to_string(),
                seeds: r.seeds.len(),
                mae_mean: mm * r.scale,
                mae_std: ms.map(|s| s * r.scale),
                rmse_mean: rm * r.scale,
                rmse_std: rs.map(|s| s * r.scale),
                scale: r.scale,
                samples: r.sample_count,
                config_fingerprint: r.config_fingerprint.clone(),
            }
        })
        .collect()
}

fn csv_bytes<T: Serialize>(path: &Path, rows: &[T], empty_header: &[&str]) -> Result<Vec<u8>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(empty_header).map_err(csv_err)?;
    }
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e.into_error(),
    })
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], empty_header: &[&str]) -> Result<()> {
    let bytes = csv_bytes(path, rows, empty_header)?;
    write_atomic(path, |w| w.write_all(&bytes))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    csv::Reader::from_reader(file)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })
}

pub const METRIC_COLUMNS: [&str; 8] = [
    "method",
    "seed",
    "mae",
    "rmse",
    "mae_scaled",
    "rmse_scaled",
    "samples",
    "config_fingerprint",
];
pub const TABLE_COLUMNS: [&str; 9] = [
    "method",
    "seeds",
    "mae_mean",
    "mae_std",
    "rmse_mean",
    "rmse_std",
    "scale",
    "samples",
    "config_fingerprint",
];

pub fn write_metrics(path: &Path, reports: &[RunReport]) -> Result<()> {
    write_csv(path, &metric_rows(reports), &METRIC_COLUMNS)
}

pub fn write_table(path: &Path, reports: &[RunReport]) -> Result<()> {
    write_csv(path, &table_rows(reports), &TABLE_COLUMNS)
}

/// Rebuilds reports from `metrics.csv` rows, grouping by method in the
/// order methods first appear.
pub fn reports_from_rows(path: &Path, rows: &[MetricRow], scale: f64) -> Result<Vec<RunReport>> {
    let mut out: Vec<RunReport> = Vec::new();
    for row in rows {
        let method = Method::parse(&row.method).ok_or_else(|| Error::Format {
            path: path.to_path_buf(),
            msg: format!("unknown method {}", row.method),
        })?;
        let idx = match out.iter().position(|r| r.method == method) {
            Some(i) => i,
            None => {
                out.push(RunReport {
                    method,
                    seeds: Vec::new(),
                    mae: Vec::new(),
                    rmse: Vec::new(),
                    scale,
                    sample_count: row.samples,
                    config_fingerprint: row.config_fingerprint.clone(),
                });
                out.len() - 1
            }
        };
        let r = &mut out[idx];
        r.seeds.push(row.seed);
        r.mae.push(row.mae);
        r.rmse.push(row.rmse);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iteration: usize,
    pub mean_reward: f64,
    pub max_reward: f64,
}

pub fn write_grpo_history(path: &Path, history: &[IterationStats]) -> Result<()> {
    let rows: Vec<HistoryRow> = history
        .iter()
        .map(|s| HistoryRow {
            iteration: s.iteration,
            mean_reward: s.mean_reward,
            max_reward: s.max_reward,
        })
        .collect();
    write_csv(path, &rows, &["iteration", "mean_reward", "max_reward"])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> RunReport {
        RunReport {
            method: Method::Uni,
            seeds: vec![0, 1],
            mae: vec![0.05, 0.07],
            rmse: vec![0.08, 0.1],
            scale: 100.0,
            sample_count: 10,
            config_fingerprint: "abc".into(),
        }
    }

    #[test]
    fn metrics_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("metrics.csv");
        write_metrics(&p, &[report()]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with(
            "method,seed,mae,rmse,mae_scaled,rmse_scaled,samples,config_fingerprint\n"
        ));
        assert!(text.contains("Uni,0,0.05,0.08,5.0,8.0,10,abc\n"), "{text}");
        let rows: Vec<MetricRow> = read_csv(&p).unwrap();
        assert_eq!(reports_from_rows(&p, &rows, 100.0).unwrap(), vec![report()]);
    }

    #[test]
    fn table_has_mean_and_std() {
        let rows = table_rows(&[report()]);
        assert!((rows[0].mae_mean - 6.0).abs() < 1e-12);
        assert!((rows[0].mae_std.unwrap() - 2f64.sqrt()).abs() < 1e-12);
        let single = RunReport {
            seeds: vec![0],
            mae: vec![0.05],
            rmse: vec![0.08],
            ..report()
        };
        assert_eq!(table_rows(&[single])[0].mae_std, None);
    }

    #[test]
    fn empty_history_still_has_a_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.csv");
        write_grpo_history(&p, &[]).unwrap();
        assert_eq!(
            std::fs::read_to_string(&p).unwrap(),
            "iteration,mean_reward,max_reward\n"
        );
    }
}
