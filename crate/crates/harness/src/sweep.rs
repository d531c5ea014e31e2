use std::path::{Path, PathBuf};

use afc_core::io::fmt_float;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::{HarnessError, Result};
use crate::output::write_atomic;
use crate::scenarios::{evaluate, summary_keys};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub parameter: String,
    /// Summary columns after the parameter column.
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl SweepTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i + 1]).collect())
    }

    pub fn to_csv(&self, config_hash: &str) -> String {
        let mut out = format!(
            "# config_hash: {config_hash}\n# parameter: {}\n",
            self.parameter
        );
        let name = self.parameter.trim_start_matches('/').replace('/', ".");
        out.push_str(&name);
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|&v| fmt_float(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Accepts `a.b.c` or `/a/b/c`.
pub fn to_pointer(path: &str) -> String {
    if path.starts_with('/') {
        path.to_string()
    } else {
        format!("/{}", path.replace('.', "/"))
    }
}

/// Copy of `config` with the value at `path` replaced.
pub fn with_parameter(config: &ScenarioConfig, path: &str, value: f64) -> Result<ScenarioConfig> {
    let pointer = to_pointer(path);
    let mut doc = serde_json::to_value(config).expect("configs serialize");
    let slot = doc
        .pointer_mut(&pointer)
        .ok_or_else(|| HarnessError::PathNotFound(path.to_string()))?;
    *slot = if slot.is_u64() && value >= 0.0 && value.fract() == 0.0 {
        serde_json::Value::from(value as u64)
    } else {
        serde_json::Value::from(value)
    };
    ScenarioConfig::from_json_value(doc)
}

/// One in-memory run per value, rows in the order given. Points run
/// concurrently on up to `config.workers` threads.
pub fn sweep(config: &ScenarioConfig, path: &str, values: &[f64]) -> Result<SweepTable> {
    let pointer = to_pointer(path);
    // resolve the path even when there is nothing to run
    let doc = serde_json::to_value(config).expect("configs serialize");
    if doc.pointer(&pointer).is_none() {
        return Err(HarnessError::PathNotFound(path.to_string()));
    }
    let columns: Vec<String> = summary_keys(config.scenario)
        .iter()
        .map(|s| s.to_string())
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::InvalidArgument(e.to_string()))?;
    let rows = pool.install(|| {
        values
            .par_iter()
            .map(|&v| {
                let cfg = with_parameter(config, path, v)?;
                let (summary, _) = evaluate(&cfg)?;
                let mut row = vec![v];
                row.extend(
                    columns
                        .iter()
                        .map(|c| summary.get(c).copied().unwrap_or(f64::NAN)),
                );
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(SweepTable {
        parameter: pointer,
        columns,
        rows,
    })
}

/// Runs [`sweep`] and writes `sweep_<param>.csv` into the config's output directory.
pub fn run_sweep(
    config: &ScenarioConfig,
    output_root: &Path,
    path: &str,
    values: &[f64],
) -> Result<(SweepTable, PathBuf)> {
    let table = sweep(config, path, values)?;
    let name = to_pointer(path).trim_start_matches('/').replace('/', ".");
    let file = output_root
        .join(config.output_dir_name())
        .join(format!("sweep_{name}.csv"));
    write_atomic(&file, table.to_csv(&config.hash()).as_bytes())?;
    Ok((table, file))
}
