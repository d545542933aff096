//! Throughput benches for the training hot path and the experiment sweep.
//!
//! The seed sweep uses rayon when the default `parallel` feature is on and
//! falls back to a sequential loop without it, so comparing
//! `cargo bench` against `cargo bench --no-default-features` measures the
//! parallel speedup on identical work.

use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};

use cope_core::agents::{
    run_experiment, run_learner, EvaluatorConfig, ExperimentCase, LearnerConfig, Method,
    RunOptions,
};
use cope_core::embed_net::{EmbeddingNetwork, NetConfig};
use cope_core::numerics::Rng;
use cope_core::ppp_loss::{ppp_loss, LabeledFeatures, LossConfig};
use cope_core::streams::{build_stream, synth_gaussians, StreamSpec};

fn mnist_like_net() -> EmbeddingNetwork {
    EmbeddingNetwork::new(NetConfig {
        input_dim: 784,
        hidden: vec![400, 400],
        latent_dim: 100,
        init_seed: 7,
        weight_init_scale: 1.0,
    })
    .unwrap()
}

fn bench_forward_backward(c: &mut Criterion) {
    let net = mnist_like_net();
    let mut rng = Rng::from_seed(1);
    let inputs = ndarray::Array2::from_shape_fn((20, 784), |_| rng.uniform());
    let upstream = ndarray::Array2::from_shape_fn((20, 100), |_| rng.normal() * 0.01);
    c.bench_function("forward_backward_batch20", |b| {
        b.iter(|| {
            let (features, cache) = net.forward(black_box(inputs.view())).unwrap();
            let grads = net.backward(&cache, upstream.view()).unwrap();
            black_box((features, grads))
        })
    });
}

fn bench_ppp_loss(c: &mut Criterion) {
    let mut rng = Rng::from_seed(2);
    let n = 20;
    let d = 100;
    let features = {
        let raw = ndarray::Array2::from_shape_fn((n, d), |_| rng.normal());
        cope_core::numerics::l2_normalize_rows(raw.view()).unwrap()
    };
    let labels: Vec<usize> = (0..n).map(|i| i % 10).collect();
    let mut protos = std::collections::BTreeMap::new();
    for cid in 0..10 {
        let raw = ndarray::Array1::from_shape_fn(d, |_| rng.normal());
        protos.insert(cid, cope_core::numerics::l2_normalize(raw.view()).unwrap());
    }
    let cfg = LossConfig::default();
    c.bench_function("ppp_loss_batch20_d100", |b| {
        b.iter(|| {
            let batch = LabeledFeatures::new(features.view(), &labels, &protos).unwrap();
            black_box(ppp_loss(&batch, &cfg).unwrap().loss)
        })
    });
}

fn smoke_case(seed_offset: u64) -> ExperimentCase {
    let train = Arc::new(synth_gaussians(2, 16, 10.0, 250, 11 + seed_offset).unwrap());
    let eval = Arc::new(synth_gaussians(2, 16, 10.0, 100, 12 + seed_offset).unwrap());
    ExperimentCase {
        name: format!("smoke-{seed_offset}"),
        train,
        eval,
        stream: StreamSpec {
            tasks: vec![vec![0], vec![1]],
            task_caps: None,
            batch_size: 10,
            shuffle_within_task: true,
            iid: false,
            seed: 0,
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
            periodicity: 1_000_000,
            eval_batch_size: 256,
        },
    }
}

fn bench_single_run(c: &mut Criterion) {
    let case = smoke_case(0);
    let stream = build_stream(
        Arc::clone(&case.train),
        Arc::clone(&case.eval),
        &case.stream,
    )
    .unwrap();
    c.bench_function("cope_run_synth_500", |b| {
        b.iter(|| {
            let out = run_learner(
                &stream,
                &case.learner,
                &case.evaluator,
                black_box(0),
                &RunOptions::default(),
            )
            .unwrap();
            black_box(out.result.final_accuracy)
        })
    });
}

fn bench_seed_sweep(c: &mut Criterion) {
    let case = smoke_case(0);
    let seeds: Vec<u64> = (0..8).collect();
    let mode = if cfg!(feature = "parallel") {
        "parallel"
    } else {
        "sequential"
    };
    c.bench_function(&format!("seed_sweep_x8_{mode}"), |b| {
        b.iter(|| {
            let report = run_experiment(std::slice::from_ref(&case), &seeds).unwrap();
            black_box(report.cases[0].mean_accuracy)
        })
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_forward_backward, bench_ppp_loss, bench_single_run, bench_seed_sweep
}
criterion_main!(benches);
