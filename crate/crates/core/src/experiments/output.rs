//! CSV tables and JSON metadata sidecars for benchmark results.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::RNG_NAME;
use crate::codec::write_atomic;
use crate::error::{Error, Result};
use crate::oracle::RatioCurve;

fn output_err(e: impl std::fmt::Display) -> Error {
    Error::Output(e.to_string())
}

/// Writes `header` and `rows` as CSV, atomically.
pub fn write_table_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(output_err)?;
    for row in rows {
        w.write_record(row).map_err(output_err)?;
    }
    let bytes = w.into_inner().map_err(output_err)?;
    write_atomic(path, &bytes).map_err(output_err)
}

/// One row per level: `level, iq_rmse, eq_rmse, ratio, runs`.
pub fn write_curve_csv(path: &Path, curve: &RatioCurve) -> Result<()> {
    let rows: Vec<Vec<String>> = (0..curve.levels.len())
        .map(|j| {
            vec![
                curve.levels[j].to_string(),
                curve.iq_rmse[j].to_string(),
                curve.eq_rmse[j].to_string(),
                curve.ratio[j].to_string(),
                curve.runs.to_string(),
            ]
        })
        .collect();
    write_table_csv(path, &["level", "iq_rmse", "eq_rmse", "ratio", "runs"], &rows)
}

fn unix_seconds(t: SystemTime) -> f64 {
    t.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Writes a JSON sidecar echoing the configuration, seed, generator,
/// start/finish times and any `extra` notes.
pub fn write_metadata(
    path: &Path,
    experiment: &str,
    config: &impl Serialize,
    seed: u64,
    started: SystemTime,
    extra: &[(&str, String)],
) -> Result<()> {
    let extra: serde_json::Map<String, serde_json::Value> =
        extra.iter().map(|(k, v)| (k.to_string(), serde_json::Value::from(v.as_str()))).collect();
    let meta = serde_json::json!({
        "experiment": experiment,
        "config": config,
        "seed": seed,
        "rng": RNG_NAME,
        "started_unix": unix_seconds(started),
        "finished_unix": unix_seconds(SystemTime::now()),
        "version": env!("CARGO_PKG_VERSION"),
        "extra": extra,
    });
    let mut text = serde_json::to_string_pretty(&meta).map_err(output_err)?;
    text.push('\n');
    write_atomic(path, text.as_bytes()).map_err(output_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_csv_layout() {
        let curve = RatioCurve {
            levels: vec![0.0, 0.5],
            iq_rmse: vec![1.0, 0.25],
            eq_rmse: vec![1.0, 0.125],
            ratio: vec![1.0, 2.0],
            ratio_se: vec![0.0, 0.1],
            runs: 7,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        write_curve_csv(&path, &curve).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "level,iq_rmse,eq_rmse,ratio,runs\n0,1,1,1,7\n0.5,0.25,0.125,2,7\n");
        let meta = dir.path().join("c.json");
        write_metadata(&meta, "demo", &serde_json::json!({"n": 1}), 9, SystemTime::now(), &[("note", "x".into())])
            .unwrap();
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&meta).unwrap()).unwrap();
        assert_eq!(v["seed"], 9);
        assert_eq!(v["extra"]["note"], "x");
        assert!(v["rng"].as_str().unwrap().starts_with("ChaCha8"));
    }
}
