//! The prototype learner loop: sample replay, collect features over the
//! joint batch, one PPP-loss SGD step, then prototype and memory updates.

use ndarray::{Array2, Axis};

use crate::embed_net::EmbeddingNetwork;
use crate::error::Result;
use crate::numerics::{Matrix, Rng};
use crate::ppp_loss::{ppp_loss, LabeledFeatures};
use crate::proto_memory::{Exemplar, MemoryConfig, ProtoMemory};
use crate::snapshot::Checkpoint;
use crate::streams::{Stream, StreamBatch};

use super::baselines::run_baseline_learner;
use super::evaluator::{evaluate, Classifier};
use super::{
    recall_from_confusion, EvaluatorConfig, LearnerConfig, LossPoint, Method, RunConfig,
    RunResult, TimelinePoint,
};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Capture a checkpoint after this many stream batches.
    pub checkpoint_at: Option<u64>,
    /// Capture the final learner state.
    pub capture_final: bool,
}

pub struct RunOutcome {
    pub result: RunResult,
    pub final_checkpoint: Option<Checkpoint>,
    pub mid_checkpoint: Option<Checkpoint>,
}

/// Dispatch on the configured method.
pub fn run_learner(
    stream: &Stream,
    cfg: &LearnerConfig,
    eval_cfg: &EvaluatorConfig,
    seed: u64,
    opts: &RunOptions,
) -> Result<RunOutcome> {
    match cfg.method {
        Method::Cope => run_cope_learner(stream, cfg, eval_cfg, seed, opts),
        _ => run_baseline_learner(stream, cfg, eval_cfg, seed, opts),
    }
}

/// Join the incoming batch with replayed exemplars; stream samples first.
pub(super) fn join_batch(b_n: &StreamBatch, replay: &[Exemplar]) -> (Matrix, Vec<usize>) {
    let total = b_n.len() + replay.len();
    let dim = b_n.inputs.ncols();
    let mut inputs = Array2::zeros((total, dim));
    let mut labels = Vec::with_capacity(total);
    for (row, label) in b_n.labels.iter().enumerate() {
        inputs
            .index_axis_mut(Axis(0), row)
            .assign(&b_n.inputs.row(row));
        labels.push(*label);
    }
    for (offset, e) in replay.iter().enumerate() {
        inputs
            .index_axis_mut(Axis(0), b_n.len() + offset)
            .assign(&e.input);
        labels.push(e.label);
    }
    (inputs, labels)
}

/// Derive the per-run network seed so distinct run seeds give distinct
/// initializations while the config stays shared.
pub(super) fn net_seed(seed: u64) -> u64 {
    Rng::from_seed(seed).child("net-init").next_u64()
}

pub fn run_cope_learner(
    stream: &Stream,
    cfg: &LearnerConfig,
    eval_cfg: &EvaluatorConfig,
    seed: u64,
    opts: &RunOptions,
) -> Result<RunOutcome> {
    cfg.validate()?;
    eval_cfg.validate()?;
    let root = Rng::from_seed(seed);
    let mut proto_rng = root.child("proto-init");
    let mut reservoir_rng = root.child("reservoir");
    let mut replay_rng = root.child("replay");

    let mut net_cfg = cfg.net.clone();
    net_cfg.init_seed = net_seed(seed);
    let mut net = EmbeddingNetwork::new(net_cfg)?;
    let mut memory = ProtoMemory::new(MemoryConfig {
        capacity: cfg.memory_capacity,
        momentum: cfg.momentum,
        normalize_prototypes: cfg.normalize_prototypes,
        stream_only_counts: cfg.stream_only_counts,
        latent_dim: cfg.net.latent_dim,
    })?;

    let total = stream.num_batches() as u64;
    let mut accuracy_timeline = Vec::new();
    let mut loss_timeline = Vec::with_capacity(stream.num_batches());
    let mut last_eval = None;
    let mut mid_checkpoint = None;

    for batch_idx in 0..stream.num_batches() {
        let b_n = stream.batch(batch_idx);
        let replay = memory.sample_replay(b_n.len(), &mut replay_rng);
        for &y in b_n.labels.iter().chain(replay.iter().map(|e| &e.label)) {
            if !memory.is_observed(y) {
                memory.init_class(y, &mut proto_rng)?;
            }
        }
        let (inputs, labels) = join_batch(&b_n, &replay);

        let mut last_features = None;
        let mut last_loss = None;
        for _ in 0..cfg.iterations_per_batch {
            let (features, cache) = net.forward(inputs.view())?;
            let batch = LabeledFeatures::new(features.view(), &labels, memory.prototypes())?;
            let out = ppp_loss(&batch, &cfg.loss)?;
            let grads = net.backward(&cache, out.d_features.view())?;
            net.sgd_step(&grads, cfg.learning_rate)?;
            last_loss = Some((out.loss, out.pos, out.neg));
            last_features = Some(features);
        }
        let features = last_features.expect("at least one iteration");
        let (loss, pos, neg) = last_loss.expect("at least one iteration");

        memory.prototype_update(features.view(), &labels)?;
        memory.memory_update(b_n.inputs.view(), &b_n.labels, &mut reservoir_rng)?;

        let seen = batch_idx as u64 + 1;
        loss_timeline.push(LossPoint {
            batch: seen,
            loss,
            pos_fraction: Some(if pos + neg == 0.0 { 0.5 } else { pos / (pos + neg) }),
        });
        if seen % eval_cfg.periodicity == 0 || seen == total {
            let outcome = evaluate(
                &net,
                &Classifier::Prototypes(&memory),
                stream.eval(),
                eval_cfg.eval_batch_size,
            )?;
            accuracy_timeline.push(TimelinePoint {
                batches_seen: seen,
                accuracy: outcome.accuracy,
            });
            last_eval = Some(outcome);
        }
        if opts.checkpoint_at == Some(seen) {
            mid_checkpoint = Some(Checkpoint::capture(
                Method::Cope,
                seen,
                &net,
                Some(&memory),
                None,
            ));
        }
    }

    let final_eval = last_eval.expect("stream produced at least one batch");
    let result = RunResult {
        seed,
        final_accuracy: final_eval.accuracy,
        accuracy_timeline,
        per_class_recall: recall_from_confusion(&final_eval.confusion),
        confusion: final_eval.confusion,
        loss_timeline,
        config: RunConfig {
            learner: cfg.clone(),
            evaluator: eval_cfg.clone(),
            stream: stream.spec().clone(),
        },
    };
    let final_checkpoint = opts.capture_final.then(|| {
        Checkpoint::capture(Method::Cope, total, &net, Some(&memory), None)
    });
    Ok(RunOutcome {
        result,
        final_checkpoint,
        mid_checkpoint,
    })
}
