//! Report rows, CSV emission and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::budget;
use crate::error::Result;
use crate::harness::config::ExperimentConfig;

/// One measurement: `experiment,id,N,K,t,metric,value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub id: String,
    #[serde(rename = "N")]
    pub big_n: u64,
    #[serde(rename = "K")]
    pub k: usize,
    pub t: f64,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub rows: Vec<ReportRow>,
    /// Files written besides the CSV and manifest.
    pub artifacts: Vec<PathBuf>,
    /// Non-fatal problems, e.g. ladder entries skipped for budget reasons.
    pub warnings: Vec<String>,
    /// Scalar results echoed into the manifest.
    pub summary: BTreeMap<String, f64>,
}

impl Report {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            ..Default::default()
        }
    }

    pub fn push(&mut self, id: &str, big_n: u64, k: usize, t: f64, metric: &str, value: f64) {
        self.rows.push(ReportRow {
            experiment: self.experiment.clone(),
            id: id.to_string(),
            big_n,
            k,
            t,
            metric: metric.to_string(),
            value,
        });
    }

    pub fn extend(&mut self, other: Report) {
        self.rows.extend(other.rows);
        self.artifacts.extend(other.artifacts);
        self.warnings.extend(other.warnings);
        self.summary.extend(other.summary);
    }

    /// Rows with the given metric, in report order.
    pub fn metric(&self, metric: &str) -> Vec<&ReportRow> {
        self.rows.iter().filter(|r| r.metric == metric).collect()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub crate_version: String,
    pub parallel: bool,
    pub threads: usize,
    pub budget: budget::Caps,
    pub config: ExperimentConfig,
    pub rows: usize,
    pub csv: PathBuf,
    pub artifacts: Vec<PathBuf>,
    pub warnings: Vec<String>,
    pub summary: BTreeMap<String, f64>,
}

/// Writes `<experiment>.csv` and `<experiment>.json` into the configured output directory.
pub fn emit(report: &Report, config: &ExperimentConfig) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(&config.output)?;
    let csv = config.output.join(format!("{}.csv", report.experiment));
    report.write_csv(&csv)?;
    let manifest = Manifest {
        experiment: report.experiment.clone(),
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        parallel: cfg!(feature = "parallel"),
        threads: crate::par::threads(),
        budget: budget::caps(),
        config: config.clone(),
        rows: report.rows.len(),
        csv: csv.clone(),
        artifacts: report.artifacts.clone(),
        warnings: report.warnings.clone(),
        summary: report.summary.clone(),
    };
    let json = config.output.join(format!("{}.json", report.experiment));
    fs::write(&json, serde_json::to_string_pretty(&manifest)?)?;
    Ok((csv, json))
}
