//! Reproduction presets. Hyperparameters are spelled out in full so a
//! single `run --preset` command reproduces the corresponding benchmark.

use cope_core::agents::{EvaluatorConfig, LearnerConfig, Method};
use cope_core::embed_net::NetConfig;
use cope_core::ppp_loss::LossConfig;

use crate::config::{ExperimentConfig, SourceConfig, StreamConfig};
use crate::{CliError, CliResult};

pub const LR_GRID: [f64; 4] = [0.05, 0.01, 0.005, 0.001];
pub const DEFAULT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

pub fn names() -> &'static [&'static str] {
    &[
        "split-mnist-balanced",
        "split-mnist-imbalanced",
        "synth-smoke",
    ]
}

pub fn by_name(name: &str) -> CliResult<ExperimentConfig> {
    match name {
        "split-mnist-balanced" => Ok(split_mnist_balanced()),
        "split-mnist-imbalanced" => Ok(split_mnist_imbalanced()),
        "synth-smoke" => Ok(synth_smoke()),
        other => Err(CliError::config(format!(
            "unknown preset '{other}'; available: {}",
            names().join(", ")
        ))),
    }
}

/// Balanced split-MNIST: 2x400 MLP, 100-d latent, 2k memory, momentum 0.99,
/// temperature 0.1, online batches of 10, learning-rate grid over 5 seeds.
pub fn split_mnist_balanced() -> ExperimentConfig {
    ExperimentConfig {
        stream: StreamConfig {
            source: SourceConfig::SplitMnist {
                imbalanced_focus_task: None,
                big_cap: 2000,
                small_cap: 200,
            },
            batch_size: 10,
            iid: false,
        },
        learner: LearnerConfig {
            method: Method::Cope,
            net: NetConfig {
                input_dim: 784,
                hidden: vec![400, 400],
                latent_dim: 100,
                init_seed: 0,
                weight_init_scale: 1.0,
            },
            loss: LossConfig {
                temperature: 0.1,
                include_pseudo_prototypes: true,
                attractor_enabled: true,
                repellor_enabled: true,
            },
            memory_capacity: 2000,
            momentum: 0.99,
            normalize_prototypes: true,
            stream_only_counts: false,
            learning_rate: 0.01,
            iterations_per_batch: 1,
            epochs: 1,
        },
        evaluator: EvaluatorConfig {
            periodicity: 600,
            eval_batch_size: 512,
        },
        seeds: DEFAULT_SEEDS.to_vec(),
        lr_grid: Some(LR_GRID.to_vec()),
        mnist_imbalanced_suite: false,
    }
}

/// Imbalanced split-MNIST suite: low-capacity setup (2x100 MLP, 64-d
/// latent, 300 memories), all five focus variants, averaged.
pub fn split_mnist_imbalanced() -> ExperimentConfig {
    let mut config = split_mnist_balanced();
    config.learner.net.hidden = vec![100, 100];
    config.learner.net.latent_dim = 64;
    config.learner.memory_capacity = 300;
    config.evaluator = EvaluatorConfig {
        periodicity: 100,
        eval_batch_size: 512,
    };
    config.mnist_imbalanced_suite = true;
    config
}

/// Two well-separated Gaussian classes streamed sequentially; finishes in
/// seconds and demonstrates the forgetting gap against `finetune`.
pub fn synth_smoke() -> ExperimentConfig {
    ExperimentConfig {
        stream: StreamConfig {
            source: SourceConfig::Synth {
                classes: 2,
                dim: 16,
                separation: 10.0,
                train_per_class: 500,
                eval_per_class: 200,
                data_seed: 7,
            },
            batch_size: 10,
            iid: false,
        },
        learner: LearnerConfig {
            method: Method::Cope,
            net: NetConfig {
                input_dim: 16,
                hidden: vec![32],
                latent_dim: 8,
                init_seed: 0,
                weight_init_scale: 1.0,
            },
            loss: LossConfig::default(),
            memory_capacity: 100,
            momentum: 0.9,
            normalize_prototypes: true,
            stream_only_counts: false,
            learning_rate: 0.05,
            iterations_per_batch: 1,
            epochs: 1,
        },
        evaluator: EvaluatorConfig {
            periodicity: 25,
            eval_batch_size: 256,
        },
        seeds: vec![0],
        lr_grid: None,
        mnist_imbalanced_suite: false,
    }
}
