//! Report emission. Every experiment produces named tables and optional
//! plot series; this module renders them as CSV, JSON, or plot-data files
//! with deterministic column ordering and shortest-roundtrip float text,
//! so identical runs produce byte-identical bodies.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

pub const RESULTS_FILE: &str = "results.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// One figure's data: `(x, y, series)` triples for external plotting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlotData {
    pub name: String,
    pub rows: Vec<(String, String, String)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    /// False when an audit-style experiment found a violated inequality.
    pub ok: bool,
    pub tables: Vec<Table>,
    pub plots: Vec<PlotData>,
    pub summary: serde_json::Value,
    /// Files the experiment wrote directly (e.g. trajectory dumps), for
    /// the manifest's output index.
    #[serde(default)]
    pub extra_outputs: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
    Plotdata,
}

fn csv_cell(value: &str) -> String {
    if value.contains(',') || value.contains('"') || value.contains('\n') {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<String> {
    let path = dir.join(name);
    std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(name.to_string())
}

pub fn table_to_csv(table: &Table) -> String {
    let mut out = String::new();
    out.push_str(
        &table
            .columns
            .iter()
            .map(|c| csv_cell(c))
            .collect::<Vec<_>>()
            .join(","),
    );
    out.push('\n');
    for row in &table.rows {
        out.push_str(
            &row.iter()
                .map(|c| csv_cell(c))
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push('\n');
    }
    out
}

/// Emits one experiment in one format; returns the files written.
pub fn emit_experiment(
    dir: &Path,
    result: &ExperimentResult,
    format: ReportFormat,
) -> Result<Vec<String>> {
    let mut written = Vec::new();
    match format {
        ReportFormat::Csv => {
            for table in &result.tables {
                written.push(write_file(
                    dir,
                    &format!("{}.csv", table.name),
                    &table_to_csv(table),
                )?);
            }
        }
        ReportFormat::Json => {
            let body = serde_json::to_string_pretty(result)?;
            written.push(write_file(dir, &format!("{}.json", result.name), &body)?);
        }
        ReportFormat::Plotdata => {
            for plot in &result.plots {
                let mut body = String::from("x,y,series\n");
                for (x, y, series) in &plot.rows {
                    body.push_str(&format!(
                        "{},{},{}\n",
                        csv_cell(x),
                        csv_cell(y),
                        csv_cell(series)
                    ));
                }
                written.push(write_file(dir, &format!("plot_{}.csv", plot.name), &body)?);
            }
        }
    }
    Ok(written)
}

pub fn write_results(dir: &Path, results: &[ExperimentResult]) -> Result<String> {
    let body = serde_json::to_string_pretty(results)?;
    write_file(dir, RESULTS_FILE, &body)
}

pub fn load_results(dir: &Path) -> Result<Vec<ExperimentResult>> {
    let path = dir.join(RESULTS_FILE);
    let body =
        std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&body)?)
}
