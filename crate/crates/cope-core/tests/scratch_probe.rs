//! Temporary calibration probe; removed before release.

use std::sync::Arc;
use std::time::Instant;

use cope_core::agents::{
    run_learner, EvaluatorConfig, LearnerConfig, Method, RunOptions,
};
use cope_core::embed_net::NetConfig;
use cope_core::ppp_loss::LossConfig;
use cope_core::streams::{build_stream, parse_idx, split_mnist_tasks, StreamSpec};

fn mnist_dir() -> Option<std::path::PathBuf> {
    let dir = std::env::var_os("COPE_DATA_DIR")
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| {
            std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist")
        });
    dir.join("train-images-idx3-ubyte").exists().then_some(dir)
}

#[test]
#[ignore]
fn probe_mnist_run() {
    let Some(dir) = mnist_dir() else {
        eprintln!("no mnist");
        return;
    };
    let t0 = Instant::now();
    let train = Arc::new(
        parse_idx(
            &dir.join("train-images-idx3-ubyte"),
            &dir.join("train-labels-idx1-ubyte"),
        )
        .unwrap(),
    );
    let eval = Arc::new(
        parse_idx(
            &dir.join("t10k-images-idx3-ubyte"),
            &dir.join("t10k-labels-idx1-ubyte"),
        )
        .unwrap(),
    );
    eprintln!("load: {:?}", t0.elapsed());
    let spec = StreamSpec {
        tasks: split_mnist_tasks(),
        task_caps: None,
        batch_size: 10,
        shuffle_within_task: true,
        iid: false,
        seed: 0,
    };
    let stream = build_stream(train, eval, &spec).unwrap();
    eprintln!("stream: {} batches", stream.num_batches());
    let cfg = LearnerConfig {
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
            ..LossConfig::default()
        },
        memory_capacity: 2000,
        momentum: 0.99,
        normalize_prototypes: true,
        stream_only_counts: false,
        learning_rate: 0.01,
        iterations_per_batch: 1,
        epochs: 1,
    };
    let eval_cfg = EvaluatorConfig {
        periodicity: 6000,
        eval_batch_size: 512,
    };
    let t1 = Instant::now();
    let outcome = run_learner(&stream, &cfg, &eval_cfg, 0, &RunOptions::default()).unwrap();
    eprintln!(
        "run: {:?}, final accuracy {:.4}",
        t1.elapsed(),
        outcome.result.final_accuracy
    );
    eprintln!("recall: {:?}", outcome.result.per_class_recall);
}

#[test]
#[ignore]
fn probe_synth_cope() {
    let train = Arc::new(cope_core::streams::synth_gaussians(2, 16, 10.0, 500, 1).unwrap());
    let eval = Arc::new(cope_core::streams::synth_gaussians(2, 16, 10.0, 200, 2).unwrap());
    let spec = StreamSpec {
        tasks: vec![vec![0], vec![1]],
        task_caps: None,
        batch_size: 10,
        shuffle_within_task: true,
        iid: false,
        seed: 0,
    };
    let stream = build_stream(train, eval, &spec).unwrap();
    let cfg = LearnerConfig {
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
    };
    let t = Instant::now();
    let outcome = run_learner(
        &stream,
        &cfg,
        &EvaluatorConfig::default(),
        0,
        &RunOptions::default(),
    )
    .unwrap();
    eprintln!(
        "synth cope: {:?}, acc {:.4}, timeline {:?}",
        t.elapsed(),
        outcome.result.final_accuracy,
        outcome
            .result
            .accuracy_timeline
            .iter()
            .map(|p| (p.batches_seen, (p.accuracy * 1000.0).round() / 1000.0))
            .collect::<Vec<_>>()
    );
    assert!(outcome.result.final_accuracy > 0.95);
}
