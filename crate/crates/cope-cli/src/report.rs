//! Result emission: a results.json with the deterministic payload kept
//! separate from the timestamp, plus CSV tables that the tool can read
//! back itself.

use std::path::Path;

use cope_core::agents::{CaseSummary, RunResult};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::{CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct GridRow {
    pub learning_rate: f64,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridReport {
    pub rates: Vec<GridRow>,
    pub selected_lr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VariantRow {
    pub name: String,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub selected_lr: f64,
    pub variants: Vec<VariantRow>,
    /// Mean over the variant means, with their spread.
    pub avg_mean: f64,
    pub avg_std: f64,
}

#[derive(Serialize)]
pub struct RunPayload {
    pub config: ExperimentConfig,
    pub cases: Vec<CaseSummary>,
    pub best_case: String,
    pub grid: Option<GridReport>,
    pub suite: Option<SuiteReport>,
}

#[derive(Serialize)]
struct Envelope<'a> {
    timestamp_unix: u64,
    payload: &'a RunPayload,
}

fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::run(format!("{}: {e}", path.display()))
}

/// Serialize only the payload; determinism tests compare this byte-wise.
pub fn payload_string(payload: &RunPayload) -> CliResult<String> {
    serde_json::to_string(payload).map_err(|e| CliError::run(e.to_string()))
}

pub fn write_results_json(path: &Path, payload: &RunPayload) -> CliResult<()> {
    let envelope = Envelope {
        timestamp_unix: now_unix(),
        payload,
    };
    let text = serde_json::to_string_pretty(&envelope).map_err(|e| io_err(path, e))?;
    std::fs::write(path, text).map_err(|e| io_err(path, e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub case: String,
    pub n_seeds: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub selected: bool,
}

pub fn write_summary_csv(path: &Path, cases: &[CaseSummary], best: &str) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for case in cases {
        w.serialize(SummaryRow {
            case: case.name.clone(),
            n_seeds: case.results.len(),
            mean_accuracy: case.mean_accuracy,
            std_accuracy: case.std_accuracy,
            selected: case.name == best,
        })
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn read_summary_csv(path: &Path) -> CliResult<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    r.deserialize()
        .collect::<Result<Vec<SummaryRow>, _>>()
        .map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineRow {
    pub case: String,
    pub seed: u64,
    pub batches_seen: u64,
    pub accuracy: f64,
}

pub fn write_timeline_csv(path: &Path, cases: &[CaseSummary]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for case in cases {
        for run in &case.results {
            for point in &run.accuracy_timeline {
                w.serialize(TimelineRow {
                    case: case.name.clone(),
                    seed: run.seed,
                    batches_seen: point.batches_seen,
                    accuracy: point.accuracy,
                })
                .map_err(|e| io_err(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn read_timeline_csv(path: &Path) -> CliResult<Vec<TimelineRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    r.deserialize()
        .collect::<Result<Vec<TimelineRow>, _>>()
        .map_err(|e| io_err(path, e))
}

/// Final confusion matrices, one row per (case, seed, true class).
pub fn write_confusion_csv(path: &Path, cases: &[CaseSummary]) -> CliResult<()> {
    let classes = cases
        .iter()
        .flat_map(|c| c.results.iter())
        .map(|r| r.confusion.len())
        .max()
        .unwrap_or(0);
    let mut w = csv::WriterBuilder::new()
        .from_path(path)
        .map_err(|e| io_err(path, e))?;
    let mut header = vec!["case".to_string(), "seed".to_string(), "true_class".to_string()];
    header.extend((0..classes).map(|c| format!("pred_{c}")));
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    for case in cases {
        for run in &case.results {
            for (truth, row) in run.confusion.iter().enumerate() {
                let mut record = vec![case.name.clone(), run.seed.to_string(), truth.to_string()];
                record.extend(row.iter().map(u64::to_string));
                record.resize(3 + classes, "0".to_string());
                w.write_record(&record).map_err(|e| io_err(path, e))?;
            }
        }
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn read_confusion_csv(path: &Path) -> CliResult<Vec<(String, u64, usize, Vec<u64>)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| io_err(path, e))?;
        let case = record[0].to_string();
        let seed: u64 = record[1].parse().map_err(|e| io_err(path, e))?;
        let truth: usize = record[2].parse().map_err(|e| io_err(path, e))?;
        let counts = record
            .iter()
            .skip(3)
            .map(|v| v.parse::<u64>())
            .collect::<Result<Vec<u64>, _>>()
            .map_err(|e| io_err(path, e))?;
        rows.push((case, seed, truth, counts));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub axis: String,
    pub value: String,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub n_seeds: usize,
}

pub fn write_ablation_csv(path: &Path, rows: &[AblationRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

pub fn read_ablation_csv(path: &Path) -> CliResult<Vec<AblationRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    r.deserialize()
        .collect::<Result<Vec<AblationRow>, _>>()
        .map_err(|e| io_err(path, e))
}

/// Per-run results for a single case, written alongside the aggregate when
/// a run saves checkpoints.
pub fn write_run_results_json(path: &Path, results: &[RunResult]) -> CliResult<()> {
    let text = serde_json::to_string_pretty(results).map_err(|e| io_err(path, e))?;
    std::fs::write(path, text).map_err(|e| io_err(path, e))?;
    Ok(())
}
