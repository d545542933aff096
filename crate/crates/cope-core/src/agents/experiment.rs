//! Multi-seed, multi-config experiment orchestration. Runs are independent
//! (each owns its learner and RNG tree, datasets are shared read-only), so
//! the sweep is data-parallel across (case, seed) pairs.

use std::sync::Arc;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::streams::{build_stream, Dataset, StreamSpec};

use super::learner::{run_learner, RunOptions};
use super::{EvaluatorConfig, LearnerConfig, RunResult};

/// One configuration to sweep: the stream spec's seed is replaced by each
/// run seed so every seed gets a fresh shuffle and initialization.
#[derive(Clone)]
pub struct ExperimentCase {
    pub name: String,
    pub train: Arc<Dataset>,
    pub eval: Arc<Dataset>,
    pub stream: StreamSpec,
    pub learner: LearnerConfig,
    pub evaluator: EvaluatorConfig,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CaseSummary {
    pub name: String,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub results: Vec<RunResult>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ExperimentReport {
    pub cases: Vec<CaseSummary>,
    /// Index of the case with the highest mean accuracy.
    pub best: usize,
}

impl ExperimentReport {
    pub fn best_case(&self) -> &CaseSummary {
        &self.cases[self.best]
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn run_one(case: &ExperimentCase, seed: u64) -> Result<RunResult> {
    let mut spec = case.stream.clone();
    spec.seed = seed;
    let stream = build_stream(Arc::clone(&case.train), Arc::clone(&case.eval), &spec)?;
    let outcome = run_learner(
        &stream,
        &case.learner,
        &case.evaluator,
        seed,
        &RunOptions::default(),
    )?;
    Ok(outcome.result)
}

/// Run every (case, seed) pair and aggregate mean/std per case. Any failed
/// run aborts the experiment with its case and seed attached.
pub fn run_experiment(cases: &[ExperimentCase], seeds: &[u64]) -> Result<ExperimentReport> {
    if cases.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidConfig(
            "need at least one case and one seed".into(),
        ));
    }
    let jobs: Vec<(usize, u64)> = (0..cases.len())
        .flat_map(|c| seeds.iter().map(move |&s| (c, s)))
        .collect();

    let run_job = |&(c, seed): &(usize, u64)| -> Result<(usize, RunResult)> {
        let case = &cases[c];
        run_one(case, seed)
            .map(|r| (c, r))
            .map_err(|e| Error::RunFailed {
                name: case.name.clone(),
                seed,
                source: Box::new(e),
            })
    };

    #[cfg(feature = "parallel")]
    let outcomes: Vec<(usize, RunResult)> =
        jobs.par_iter().map(run_job).collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<(usize, RunResult)> = jobs.iter().map(run_job).collect::<Result<_>>()?;

    let mut per_case: Vec<Vec<RunResult>> = vec![Vec::new(); cases.len()];
    for (c, result) in outcomes {
        per_case[c].push(result);
    }
    let summaries: Vec<CaseSummary> = per_case
        .into_iter()
        .zip(cases)
        .map(|(results, case)| {
            let accs: Vec<f64> = results.iter().map(|r| r.final_accuracy).collect();
            let (mean_accuracy, std_accuracy) = mean_std(&accs);
            CaseSummary {
                name: case.name.clone(),
                mean_accuracy,
                std_accuracy,
                results,
            }
        })
        .collect();
    let best = summaries
        .iter()
        .enumerate()
        .max_by(|a, b| {
            a.1.mean_accuracy
                .partial_cmp(&b.1.mean_accuracy)
                .expect("accuracies are finite")
        })
        .map(|(i, _)| i)
        .expect("at least one case");
    Ok(ExperimentReport {
        cases: summaries,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::Method;
    use crate::embed_net::NetConfig;
    use crate::ppp_loss::LossConfig;
    use crate::streams::synth_gaussians;

    fn tiny_case(name: &str, lr: f64) -> ExperimentCase {
        let train = Arc::new(synth_gaussians(2, 4, 8.0, 40, 100).unwrap());
        let eval = Arc::new(synth_gaussians(2, 4, 8.0, 20, 200).unwrap());
        ExperimentCase {
            name: name.into(),
            train,
            eval,
            stream: StreamSpec {
                tasks: vec![vec![0], vec![1]],
                task_caps: None,
                batch_size: 5,
                shuffle_within_task: true,
                iid: false,
                seed: 0,
            },
            learner: LearnerConfig {
                method: Method::Cope,
                net: NetConfig {
                    input_dim: 4,
                    hidden: vec![8],
                    latent_dim: 4,
                    init_seed: 0,
                    weight_init_scale: 1.0,
                },
                loss: LossConfig::default(),
                memory_capacity: 20,
                momentum: 0.9,
                normalize_prototypes: true,
                stream_only_counts: false,
                learning_rate: lr,
                iterations_per_batch: 1,
                epochs: 1,
            },
            evaluator: EvaluatorConfig::default(),
        }
    }

    #[test]
    fn aggregates_mean_and_std() {
        let report = run_experiment(&[tiny_case("a", 0.05)], &[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(report.cases.len(), 1);
        let case = &report.cases[0];
        assert_eq!(case.results.len(), 5);
        let accs: Vec<f64> = case.results.iter().map(|r| r.final_accuracy).collect();
        let (mean, std) = mean_std(&accs);
        assert!((case.mean_accuracy - mean).abs() < 1e-15);
        assert!((case.std_accuracy - std).abs() < 1e-15);
    }

    #[test]
    fn grid_flags_argmax_case() {
        let cases = vec![
            tiny_case("lr-0.05", 0.05),
            tiny_case("lr-1e-9", 1e-9),
        ];
        let report = run_experiment(&cases, &[0, 1]).unwrap();
        // A vanishing learning rate cannot beat a sensible one here.
        assert_eq!(report.best, 0);
        assert!(report.best_case().mean_accuracy >= report.cases[1].mean_accuracy);
    }

    #[test]
    fn mean_std_edge_cases() {
        assert_eq!(mean_std(&[0.5]), (0.5, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert!((m - 2.0).abs() < 1e-15);
        assert!((s - 1.0).abs() < 1e-15);
    }
}
