//! The learner-evaluator pair: online learners (prototype-based and the
//! cross-entropy baselines), an any-time evaluator over a held-out split,
//! and multi-seed experiment orchestration.

mod baselines;
mod evaluator;
mod experiment;
mod learner;

pub use baselines::{run_baseline_learner, GlobalReservoir};
pub use evaluator::{evaluate, Classifier, EvalOutcome};
pub use experiment::{run_experiment, CaseSummary, ExperimentCase, ExperimentReport};
pub use learner::{run_cope_learner, run_learner, RunOptions, RunOutcome};

use crate::embed_net::NetConfig;
use crate::error::{Error, Result};
use crate::ppp_loss::LossConfig;
use crate::streams::StreamSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Prototype learner: PPP-loss, momentum prototypes, balanced replay.
    Cope,
    /// Same memory and sampling scheme, but a cross-entropy head.
    CopeCe,
    /// Global (unbalanced) reservoir replay with a cross-entropy head.
    ReservoirCe,
    /// SGD on the incoming batch only; worst-case forgetting reference.
    Finetune,
}

impl Method {
    pub fn uses_prototypes(self) -> bool {
        matches!(self, Method::Cope)
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerConfig {
    pub method: Method,
    pub net: NetConfig,
    pub loss: LossConfig,
    /// Total replay capacity; ignored by `finetune`.
    pub memory_capacity: usize,
    /// Prototype momentum.
    pub momentum: f64,
    pub normalize_prototypes: bool,
    /// Count only stream arrivals toward the reservoir horizon.
    pub stream_only_counts: bool,
    pub learning_rate: f64,
    /// Gradient steps per processing batch; 1 is the online setting.
    pub iterations_per_batch: usize,
    /// Passes over the stream; >1 only makes sense for iid baselines.
    pub epochs: usize,
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<()> {
        self.net.validate()?;
        self.loss.validate()?;
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig("momentum must lie in [0, 1]".into()));
        }
        if self.iterations_per_batch == 0 || self.epochs == 0 {
            return Err(Error::InvalidConfig(
                "iterations_per_batch and epochs must be >= 1".into(),
            ));
        }
        if self.method == Method::Cope && self.epochs != 1 {
            return Err(Error::InvalidConfig(
                "the prototype learner is single-pass; epochs must be 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluatorConfig {
    /// Evaluate every `periodicity` stream batches (and always at the end).
    pub periodicity: u64,
    pub eval_batch_size: usize,
}

impl Default for EvaluatorConfig {
    fn default() -> Self {
        Self {
            periodicity: 100,
            eval_batch_size: 256,
        }
    }
}

impl EvaluatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.periodicity == 0 || self.eval_batch_size == 0 {
            return Err(Error::InvalidConfig(
                "periodicity and eval_batch_size must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TimelinePoint {
    pub batches_seen: u64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct LossPoint {
    pub batch: u64,
    pub loss: f64,
    /// Attractor share of the loss; absent for cross-entropy learners.
    pub pos_fraction: Option<f64>,
}

/// Echo of everything that determined a run.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RunConfig {
    pub learner: LearnerConfig,
    pub evaluator: EvaluatorConfig,
    pub stream: StreamSpec,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub final_accuracy: f64,
    pub accuracy_timeline: Vec<TimelinePoint>,
    /// Final confusion matrix over the evaluation classes; rows are true
    /// labels, columns predictions.
    pub confusion: Vec<Vec<u64>>,
    /// Recall per class id; `None` when the class had no evaluated samples.
    pub per_class_recall: Vec<Option<f64>>,
    pub loss_timeline: Vec<LossPoint>,
    pub config: RunConfig,
}

impl RunResult {
    pub fn recall(&self, class: usize) -> Option<f64> {
        self.per_class_recall.get(class).copied().flatten()
    }
}

pub(crate) fn recall_from_confusion(confusion: &[Vec<u64>]) -> Vec<Option<f64>> {
    confusion
        .iter()
        .enumerate()
        .map(|(c, row)| {
            let total: u64 = row.iter().sum();
            (total > 0).then(|| row[c] as f64 / total as f64)
        })
        .collect()
}
