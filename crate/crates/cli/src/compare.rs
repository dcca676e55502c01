//! Side-by-side tables for finished runs.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::pipeline::{AUTOCORRELATION_FILE, SUMMARY_FILE};
use crate::{CliError, Result};

pub const AUTOCORRELATION_TABLE: &str = "comparison_autocorrelation.csv";
pub const ACCEPTANCE_TABLE: &str = "comparison_acceptance.csv";
pub const OCCUPANCY_TABLE: &str = "comparison_occupancy.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub label: String,
    pub experiment: String,
    pub mode: String,
    pub ambient_dim: u64,
    pub acceptance_rate: f64,
    pub evaluation_count: u64,
    pub occupancy: Option<Vec<f64>>,
    pub autocorrelation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub runs: Vec<RunSummary>,
    pub max_lag: usize,
}

fn bad(dir: &Path, what: &str) -> CliError {
    CliError::Runtime(format!("{}: {what}", dir.display()))
}

pub fn load_run(dir: &Path) -> Result<RunSummary> {
    let path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path).map_err(CliError::io(&path))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| bad(dir, &format!("unreadable summary: {e}")))?;
    let string = |k: &str| v[k].as_str().map(str::to_string).ok_or_else(|| bad(dir, &format!("summary lacks `{k}`")));
    let occupancy = v["occupancy"]
        .as_array()
        .map(|a| a.iter().filter_map(Value::as_f64).collect());

    let path = dir.join(AUTOCORRELATION_FILE);
    let mut reader = csv::Reader::from_path(&path).map_err(|e| bad(dir, &e.to_string()))?;
    let mut autocorrelation = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| bad(dir, &e.to_string()))?;
        let value: f64 = row
            .get(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(dir, "malformed autocorrelation row"))?;
        autocorrelation.push(value);
    }
    Ok(RunSummary {
        label: dir.file_name().map_or_else(|| dir.display().to_string(), |n| n.to_string_lossy().into_owned()),
        experiment: string("experiment")?,
        mode: string("mode")?,
        ambient_dim: v["ambient_dim"].as_u64().ok_or_else(|| bad(dir, "summary lacks `ambient_dim`"))?,
        acceptance_rate: v["acceptance_rate"].as_f64().ok_or_else(|| bad(dir, "summary lacks `acceptance_rate`"))?,
        evaluation_count: v["evaluation_count"].as_u64().ok_or_else(|| bad(dir, "summary lacks `evaluation_count`"))?,
        occupancy,
        autocorrelation,
    })
}

/// Reads at least two run directories and writes the comparison tables into `out`.
pub fn compare_runs(dirs: &[PathBuf], max_lag: usize, out: &Path) -> Result<Comparison> {
    if dirs.len() < 2 {
        return Err(CliError::Usage(format!("compare needs at least 2 run directories, got {}", dirs.len())));
    }
    let runs = dirs.iter().map(|d| load_run(d)).collect::<Result<Vec<_>>>()?;
    let first = &runs[0];
    for r in &runs[1..] {
        if r.experiment != first.experiment || r.ambient_dim != first.ambient_dim {
            return Err(CliError::Runtime(format!(
                "incompatible runs: `{}` is {} in dimension {}, `{}` is {} in dimension {}",
                first.label, first.experiment, first.ambient_dim, r.label, r.experiment, r.ambient_dim
            )));
        }
    }
    if let Some(r) = runs.iter().find(|r| r.autocorrelation.len() <= max_lag) {
        return Err(CliError::Runtime(format!(
            "run `{}` has autocorrelation only up to lag {}",
            r.label,
            r.autocorrelation.len().saturating_sub(1)
        )));
    }
    fs::create_dir_all(out).map_err(CliError::io(out))?;
    let csv_err = |e: csv::Error| CliError::Runtime(e.to_string());

    let mut w = csv::Writer::from_path(out.join(AUTOCORRELATION_TABLE)).map_err(csv_err)?;
    let mut header = vec!["lag".to_string()];
    header.extend(runs.iter().map(|r| r.label.clone()));
    w.write_record(&header).map_err(csv_err)?;
    for k in 0..=max_lag {
        let mut rec = vec![k.to_string()];
        rec.extend(runs.iter().map(|r| r.autocorrelation[k].to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(CliError::io(out))?;

    let mut w = csv::Writer::from_path(out.join(ACCEPTANCE_TABLE)).map_err(csv_err)?;
    w.write_record(["run", "mode", "acceptance_rate", "evaluation_count"]).map_err(csv_err)?;
    for r in &runs {
        w.write_record([r.label.clone(), r.mode.clone(), r.acceptance_rate.to_string(), r.evaluation_count.to_string()])
            .map_err(csv_err)?;
    }
    w.flush().map_err(CliError::io(out))?;

    if runs.iter().any(|r| r.occupancy.is_some()) {
        let mut w = csv::Writer::from_path(out.join(OCCUPANCY_TABLE)).map_err(csv_err)?;
        w.write_record(["run", "mode", "fraction"]).map_err(csv_err)?;
        for r in &runs {
            for (i, f) in r.occupancy.iter().flatten().enumerate() {
                w.write_record([r.label.clone(), (i + 1).to_string(), f.to_string()]).map_err(csv_err)?;
            }
        }
        w.flush().map_err(CliError::io(out))?;
    }
    Ok(Comparison { runs, max_lag })
}
