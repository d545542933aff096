//! Experiment configuration files: strict JSON (unknown keys rejected) with
//! dotted-path overrides from the command line.

use cope_core::agents::{EvaluatorConfig, LearnerConfig};
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    /// MNIST split into digit-pair tasks, loaded from IDX files.
    SplitMnist {
        /// `None` runs the balanced stream. `Some(i)` (1-based) keeps
        /// `big_cap` samples in task i and `small_cap` in every other.
        imbalanced_focus_task: Option<usize>,
        big_cap: usize,
        small_cap: usize,
    },
    /// Seeded Gaussian clusters streamed class by class.
    Synth {
        classes: usize,
        dim: usize,
        separation: f64,
        train_per_class: usize,
        eval_per_class: usize,
        data_seed: u64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamConfig {
    pub source: SourceConfig,
    pub batch_size: usize,
    /// Globally shuffle the stream (iid baselines).
    pub iid: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub stream: StreamConfig,
    pub learner: LearnerConfig,
    pub evaluator: EvaluatorConfig,
    pub seeds: Vec<u64>,
    /// When set, sweep the learning rate and report the best mean.
    pub lr_grid: Option<Vec<f64>>,
    /// Run all five imbalanced focus variants and report their average
    /// (split-MNIST only).
    pub mnist_imbalanced_suite: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> CliResult<()> {
        self.learner
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        self.evaluator
            .validate()
            .map_err(|e| CliError::config(e.to_string()))?;
        if self.stream.batch_size == 0 {
            return Err(CliError::config("stream.batch_size must be >= 1"));
        }
        if self.seeds.is_empty() {
            return Err(CliError::config("at least one seed is required"));
        }
        if let Some(grid) = &self.lr_grid {
            if grid.is_empty() || grid.iter().any(|lr| *lr <= 0.0) {
                return Err(CliError::config("lr_grid must hold positive rates"));
            }
        }
        match &self.stream.source {
            SourceConfig::SplitMnist {
                imbalanced_focus_task,
                ..
            } => {
                if let Some(i) = imbalanced_focus_task {
                    if !(1..=5).contains(i) {
                        return Err(CliError::config(
                            "imbalanced_focus_task must lie in 1..=5",
                        ));
                    }
                }
                if self.mnist_imbalanced_suite && imbalanced_focus_task.is_some() {
                    return Err(CliError::config(
                        "mnist_imbalanced_suite replaces imbalanced_focus_task; set it to null",
                    ));
                }
            }
            SourceConfig::Synth {
                classes,
                dim,
                train_per_class,
                eval_per_class,
                ..
            } => {
                if *classes == 0 || *dim < *classes || *train_per_class == 0 || *eval_per_class == 0
                {
                    return Err(CliError::config("invalid synth source dimensions"));
                }
                if self.mnist_imbalanced_suite {
                    return Err(CliError::config(
                        "mnist_imbalanced_suite requires the split_mnist source",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Parse a config file, returning line/field diagnostics on failure.
pub fn parse_config_file(path: &std::path::Path) -> CliResult<serde_json::Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

/// Apply one `key.path=value` override to a JSON config. Paths must point
/// at existing keys; values parse as JSON when possible, else as strings.
pub fn apply_override(config: &mut serde_json::Value, spec: &str) -> CliResult<()> {
    let (path, raw_value) = spec
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("override '{spec}' is not key=value")))?;
    let value = serde_json::from_str(raw_value)
        .unwrap_or_else(|_| serde_json::Value::String(raw_value.to_string()));
    let mut cursor = &mut *config;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, segment) in segments.iter().enumerate() {
        let map = cursor.as_object_mut().ok_or_else(|| {
            CliError::config(format!("override '{path}': '{segment}' is not an object"))
        })?;
        if i + 1 == segments.len() {
            if !map.contains_key(*segment) {
                return Err(CliError::config(format!(
                    "override '{path}': unknown key '{segment}'"
                )));
            }
            map.insert((*segment).to_string(), value);
            return Ok(());
        }
        cursor = map.get_mut(*segment).ok_or_else(|| {
            CliError::config(format!("override '{path}': unknown key '{segment}'"))
        })?;
    }
    unreachable!("split never yields an empty iterator")
}

/// Decode a JSON value into a validated config.
pub fn decode(value: serde_json::Value) -> CliResult<ExperimentConfig> {
    let config: ExperimentConfig = serde_json::from_value(value)
        .map_err(|e| CliError::config(format!("invalid config: {e}")))?;
    config.validate()?;
    Ok(config)
}
