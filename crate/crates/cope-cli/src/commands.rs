//! Subcommand implementations, kept library-side so integration tests can
//! drive them directly.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use cope_core::agents::{
    evaluate, run_experiment, run_learner, CaseSummary, Classifier, ExperimentCase, Method,
    RunOptions,
};
use cope_core::snapshot::Checkpoint;
use cope_core::streams::build_stream;

use crate::config::ExperimentConfig;
use crate::report::{
    AblationRow, GridReport, GridRow, RunPayload, SuiteReport, VariantRow,
};
use crate::{data, report, CliError, CliResult};

pub struct RunArgs {
    pub config: ExperimentConfig,
    pub out_dir: Option<PathBuf>,
    pub checkpoint_out: Option<PathBuf>,
    pub checkpoint_at: Option<u64>,
    pub quiet: bool,
}

fn mean_of(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn std_of(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean_of(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

fn check_input_dim(config: &ExperimentConfig, pair: &data::DataPair) -> CliResult<()> {
    if config.learner.net.input_dim != pair.train.input_dim() {
        return Err(CliError::config(format!(
            "learner.net.input_dim is {} but the dataset has {} features",
            config.learner.net.input_dim,
            pair.train.input_dim()
        )));
    }
    Ok(())
}

/// Execute the configured experiment (learning-rate grid and imbalanced
/// suite included) and emit results.json plus CSV tables.
pub fn cmd_run(args: &RunArgs) -> CliResult<RunPayload> {
    let config = &args.config;
    config.validate()?;
    let pair = data::load(&config.stream.source)?;
    check_input_dim(config, &pair)?;

    let rates: Vec<f64> = config
        .lr_grid
        .clone()
        .unwrap_or_else(|| vec![config.learner.learning_rate]);
    let variants: Vec<Option<usize>> = if config.mnist_imbalanced_suite {
        (1..=5).map(Some).collect()
    } else {
        vec![None]
    };

    let mut cases = Vec::new();
    let mut meta = Vec::new();
    for &variant in &variants {
        for &lr in &rates {
            let mut learner = config.learner.clone();
            learner.learning_rate = lr;
            let name = match variant {
                Some(i) => format!("S(T{i})/lr={lr}"),
                None => format!("lr={lr}"),
            };
            cases.push(ExperimentCase {
                name,
                train: Arc::clone(&pair.train),
                eval: Arc::clone(&pair.eval),
                stream: data::stream_spec(&config.stream, variant),
                learner,
                evaluator: config.evaluator.clone(),
            });
            meta.push((variant, lr));
        }
    }

    let summaries: Vec<CaseSummary> = if args.checkpoint_out.is_some() || args.checkpoint_at.is_some()
    {
        // Checkpointing needs an unambiguous learner: one case, one seed.
        if cases.len() != 1 || config.seeds.len() != 1 {
            return Err(CliError::config(
                "checkpoint flags require a single configuration and a single seed",
            ));
        }
        let case = &cases[0];
        let seed = config.seeds[0];
        let mut spec = case.stream.clone();
        spec.seed = seed;
        let stream = build_stream(Arc::clone(&case.train), Arc::clone(&case.eval), &spec)?;
        let opts = RunOptions {
            checkpoint_at: args.checkpoint_at,
            capture_final: args.checkpoint_out.is_some(),
        };
        let outcome = run_learner(&stream, &case.learner, &case.evaluator, seed, &opts)?;
        if let Some(path) = &args.checkpoint_out {
            let ckpt = match (outcome.mid_checkpoint, outcome.final_checkpoint) {
                (Some(mid), _) if args.checkpoint_at.is_some() => mid,
                (_, Some(fin)) => fin,
                (Some(mid), None) => mid,
                (None, None) => unreachable!("capture options set"),
            };
            ckpt.save(path)?;
        }
        let accs = vec![outcome.result.final_accuracy];
        vec![CaseSummary {
            name: case.name.clone(),
            mean_accuracy: accs[0],
            std_accuracy: 0.0,
            results: vec![outcome.result],
        }]
    } else {
        run_experiment(&cases, &config.seeds)?.cases
    };

    // Grid selection: highest mean accuracy; for the imbalanced suite the
    // mean is taken over the five variants first.
    let mut grid = None;
    let mut suite = None;
    let best_case;
    if config.mnist_imbalanced_suite {
        let mut rows = Vec::new();
        for (ri, &lr) in rates.iter().enumerate() {
            let variant_means: Vec<f64> = (0..variants.len())
                .map(|vi| summaries[vi * rates.len() + ri].mean_accuracy)
                .collect();
            rows.push((lr, mean_of(&variant_means), std_of(&variant_means)));
        }
        let (selected_idx, &(selected_lr, avg_mean, avg_std)) = rows
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).expect("finite"))
            .expect("at least one rate");
        let variant_rows: Vec<VariantRow> = (0..variants.len())
            .map(|vi| {
                let s = &summaries[vi * rates.len() + selected_idx];
                VariantRow {
                    name: s.name.clone(),
                    mean_accuracy: s.mean_accuracy,
                    std_accuracy: s.std_accuracy,
                }
            })
            .collect();
        best_case = variant_rows
            .iter()
            .max_by(|a, b| a.mean_accuracy.partial_cmp(&b.mean_accuracy).expect("finite"))
            .map(|v| v.name.clone())
            .expect("five variants");
        suite = Some(SuiteReport {
            selected_lr,
            variants: variant_rows,
            avg_mean,
            avg_std,
        });
    } else {
        let best = summaries
            .iter()
            .enumerate()
            .max_by(|a, b| {
                a.1.mean_accuracy
                    .partial_cmp(&b.1.mean_accuracy)
                    .expect("finite")
            })
            .map(|(i, _)| i)
            .expect("at least one case");
        best_case = summaries[best].name.clone();
        if rates.len() > 1 {
            grid = Some(GridReport {
                rates: summaries
                    .iter()
                    .zip(&meta)
                    .map(|(s, &(_, lr))| GridRow {
                        learning_rate: lr,
                        mean_accuracy: s.mean_accuracy,
                        std_accuracy: s.std_accuracy,
                    })
                    .collect(),
                selected_lr: meta[best].1,
            });
        }
    }

    let payload = RunPayload {
        config: config.clone(),
        cases: summaries,
        best_case,
        grid,
        suite,
    };

    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::run(format!("{}: {e}", dir.display())))?;
        report::write_results_json(&dir.join("results.json"), &payload)?;
        report::write_summary_csv(&dir.join("summary.csv"), &payload.cases, &payload.best_case)?;
        report::write_timeline_csv(&dir.join("timeline.csv"), &payload.cases)?;
        report::write_confusion_csv(&dir.join("confusion.csv"), &payload.cases)?;
    }

    if !args.quiet {
        for case in &payload.cases {
            println!(
                "{}: {:.2} +- {:.2} ({} seeds)",
                case.name,
                100.0 * case.mean_accuracy,
                100.0 * case.std_accuracy,
                case.results.len()
            );
        }
        if let Some(s) = &payload.suite {
            println!(
                "suite avg (lr={}): {:.2} +- {:.2}",
                s.selected_lr,
                100.0 * s.avg_mean,
                100.0 * s.avg_std
            );
        }
        println!("best: {}", payload.best_case);
    }
    Ok(payload)
}

pub struct AblateArgs {
    pub axis: String,
    pub config: ExperimentConfig,
    pub out_dir: Option<PathBuf>,
    pub quiet: bool,
}

/// Sweep one ablation axis around the base configuration and emit a CSV
/// with one row per setting.
pub fn cmd_ablate(args: &AblateArgs) -> CliResult<Vec<AblationRow>> {
    let base = &args.config;
    base.validate()?;
    let pair = data::load(&base.stream.source)?;
    check_input_dim(base, &pair)?;

    let mut cases: Vec<(String, ExperimentConfig)> = Vec::new();
    match args.axis.as_str() {
        "momentum" => {
            for alpha in [0.1, 0.9, 0.95, 0.99] {
                let mut c = base.clone();
                c.learner.momentum = alpha;
                cases.push((format!("{alpha}"), c));
            }
        }
        "ppp-terms" => {
            for (name, attractor, repellor) in
                [("full", true, true), ("pos", true, false), ("neg", false, true)]
            {
                let mut c = base.clone();
                c.learner.loss.attractor_enabled = attractor;
                c.learner.loss.repellor_enabled = repellor;
                cases.push((name.to_string(), c));
            }
        }
        "pseudo-proto" => {
            for (name, incl) in [("incl", true), ("excl", false)] {
                let mut c = base.clone();
                c.learner.loss.include_pseudo_prototypes = incl;
                cases.push((name.to_string(), c));
            }
        }
        "batch-size" => {
            for b in [10usize, 20, 50, 100, 200] {
                let mut c = base.clone();
                c.stream.batch_size = b;
                cases.push((format!("{b}"), c));
            }
        }
        "buffer-size" => {
            for m in [200usize, 500, 1000, 2000, 5000] {
                let mut c = base.clone();
                c.learner.memory_capacity = m;
                cases.push((format!("{m}"), c));
            }
        }
        other => {
            return Err(CliError::config(format!(
                "unknown ablation axis '{other}'; expected momentum, ppp-terms, pseudo-proto, batch-size, or buffer-size"
            )))
        }
    }

    let experiment_cases: Vec<ExperimentCase> = cases
        .iter()
        .map(|(value, c)| ExperimentCase {
            name: format!("{}={}", args.axis, value),
            train: Arc::clone(&pair.train),
            eval: Arc::clone(&pair.eval),
            stream: data::stream_spec(&c.stream, None),
            learner: c.learner.clone(),
            evaluator: c.evaluator.clone(),
        })
        .collect();
    let outcome = run_experiment(&experiment_cases, &base.seeds)?;

    let rows: Vec<AblationRow> = outcome
        .cases
        .iter()
        .zip(&cases)
        .map(|(summary, (value, _))| AblationRow {
            axis: args.axis.clone(),
            value: value.clone(),
            mean_accuracy: summary.mean_accuracy,
            std_accuracy: summary.std_accuracy,
            n_seeds: summary.results.len(),
        })
        .collect();

    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::run(format!("{}: {e}", dir.display())))?;
        report::write_ablation_csv(&dir.join(format!("ablate-{}.csv", args.axis)), &rows)?;
    }
    if !args.quiet {
        for row in &rows {
            println!(
                "{}={}: {:.2} +- {:.2}",
                row.axis,
                row.value,
                100.0 * row.mean_accuracy,
                100.0 * row.std_accuracy
            );
        }
    }
    Ok(rows)
}

pub struct EvalArgs {
    pub checkpoint: PathBuf,
    pub config: ExperimentConfig,
    pub out_dir: Option<PathBuf>,
    pub quiet: bool,
}

#[derive(Debug, serde::Serialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub evaluated: usize,
    pub per_class_recall: Vec<Option<f64>>,
}

/// Load a checkpoint and run the evaluator only.
pub fn cmd_eval(args: &EvalArgs) -> CliResult<EvalReport> {
    let checkpoint = Checkpoint::load(&args.checkpoint)?;
    let restored = checkpoint.restore()?;
    let pair = data::load(&args.config.stream.source)?;
    if restored.net.config().input_dim != pair.train.input_dim() {
        return Err(CliError::config(format!(
            "checkpoint expects {}-dimensional inputs, dataset has {}",
            restored.net.config().input_dim,
            pair.train.input_dim()
        )));
    }
    let classifier = match (&restored.memory, &restored.head) {
        (Some(mem), _) if restored.method == Method::Cope => Classifier::Prototypes(mem),
        (_, Some((head, classes))) => Classifier::Head {
            head,
            classes: classes.as_slice(),
        },
        (Some(mem), None) => Classifier::Prototypes(mem),
        (None, None) => {
            return Err(CliError::run(
                "checkpoint holds neither prototypes nor a classification head",
            ))
        }
    };
    let outcome = evaluate(
        &restored.net,
        &classifier,
        &pair.eval,
        args.config.evaluator.eval_batch_size,
    )?;
    let per_class_recall = outcome
        .confusion
        .iter()
        .enumerate()
        .map(|(c, row)| {
            let total: u64 = row.iter().sum();
            (total > 0).then(|| row[c] as f64 / total as f64)
        })
        .collect();
    let report = EvalReport {
        accuracy: outcome.accuracy,
        evaluated: outcome.evaluated,
        per_class_recall,
    };
    if let Some(dir) = &args.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| CliError::run(format!("{}: {e}", dir.display())))?;
        let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::run(e.to_string()))?;
        std::fs::write(dir.join("eval.json"), text)
            .map_err(|e| CliError::run(e.to_string()))?;
    }
    if !args.quiet {
        println!(
            "accuracy {:.4} over {} samples",
            report.accuracy, report.evaluated
        );
    }
    Ok(report)
}

/// Print the fully explicit default configuration.
pub fn cmd_dump_defaults(writer: &mut impl std::io::Write) -> CliResult<()> {
    let config = crate::presets::split_mnist_balanced();
    let text =
        serde_json::to_string_pretty(&config).map_err(|e| CliError::run(e.to_string()))?;
    writeln!(writer, "{text}").map_err(|e| CliError::run(e.to_string()))?;
    Ok(())
}

/// Resolve preset/config-file/overrides/seed-count into a config.
pub fn resolve_config(
    preset: Option<&str>,
    config_path: Option<&Path>,
    overrides: &[String],
    seeds: Option<usize>,
) -> CliResult<ExperimentConfig> {
    let mut value = match (preset, config_path) {
        (Some(_), Some(_)) => {
            return Err(CliError::config("--preset and --config are mutually exclusive"))
        }
        (Some(name), None) => serde_json::to_value(crate::presets::by_name(name)?)
            .map_err(|e| CliError::config(e.to_string()))?,
        (None, Some(path)) => crate::config::parse_config_file(path)?,
        (None, None) => {
            return Err(CliError::config("provide --preset or --config"));
        }
    };
    for spec in overrides {
        crate::config::apply_override(&mut value, spec)?;
    }
    let mut config = crate::config::decode(value)?;
    if let Some(n) = seeds {
        if n == 0 {
            return Err(CliError::config("--seeds must be at least 1"));
        }
        config.seeds = (0..n as u64).collect();
    }
    Ok(config)
}
