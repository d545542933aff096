//! Cross-entropy baseline learners sharing the embedding backbone: plain
//! finetuning, global reservoir replay, and the balanced-memory variant that
//! differs from the prototype learner only in its classifier and loss.

use std::collections::BTreeMap;

use crate::embed_net::{EmbeddingNetwork, LinearHead};
use crate::error::{Error, Result};
use crate::numerics::{Rng, Vector};
use crate::ppp_loss::cross_entropy_loss;
use crate::proto_memory::{Exemplar, MemoryConfig, ProtoMemory};
use crate::snapshot::Checkpoint;
use crate::streams::Stream;

use super::evaluator::{evaluate, Classifier};
use super::learner::{join_batch, net_seed, RunOptions, RunOutcome};
use super::{
    recall_from_confusion, EvaluatorConfig, LearnerConfig, LossPoint, Method, RunConfig,
    RunResult, TimelinePoint,
};

/// Plain reservoir buffer over the whole stream: each of the `n` samples
/// seen so far survives with probability capacity/n.
#[derive(Debug, Clone)]
pub struct GlobalReservoir {
    items: Vec<Exemplar>,
    capacity: usize,
    seen: u64,
}

impl GlobalReservoir {
    pub fn new(capacity: usize) -> Self {
        Self {
            items: Vec::new(),
            capacity,
            seen: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn observe(&mut self, input: Vector, label: usize, rng: &mut Rng) {
        self.seen += 1;
        if self.items.len() < self.capacity {
            self.items.push(Exemplar { input, label });
        } else if self.capacity > 0 {
            let j = rng.index(self.seen as usize);
            if j < self.capacity {
                self.items[j] = Exemplar { input, label };
            }
        }
    }

    /// Uniform without-replacement draw of up to `k` exemplars.
    pub fn sample(&self, k: usize, rng: &mut Rng) -> Vec<Exemplar> {
        let mut idx: Vec<usize> = (0..self.items.len()).collect();
        let take = k.min(idx.len());
        for i in 0..take {
            let j = i + rng.index(idx.len() - i);
            idx.swap(i, j);
        }
        idx[..take].iter().map(|&i| self.items[i].clone()).collect()
    }
}

enum Buffer {
    None,
    Balanced(ProtoMemory),
    Global(GlobalReservoir),
}

impl Buffer {
    fn sample(&self, k: usize, rng: &mut Rng) -> Vec<Exemplar> {
        match self {
            Buffer::None => Vec::new(),
            Buffer::Balanced(mem) => mem.sample_replay(k, rng),
            Buffer::Global(res) => res.sample(k, rng),
        }
    }
}

/// Train a cross-entropy learner over the stream: `finetune` sees only the
/// incoming batch, `reservoir_ce` replays from a global reservoir, and
/// `cope_ce` replays from the class-balanced memory.
pub fn run_baseline_learner(
    stream: &Stream,
    cfg: &LearnerConfig,
    eval_cfg: &EvaluatorConfig,
    seed: u64,
    opts: &RunOptions,
) -> Result<RunOutcome> {
    cfg.validate()?;
    eval_cfg.validate()?;
    if cfg.method == Method::Cope {
        return Err(Error::InvalidConfig(
            "run_baseline_learner cannot run the prototype method".into(),
        ));
    }
    let root = Rng::from_seed(seed);
    let mut proto_rng = root.child("proto-init");
    let mut reservoir_rng = root.child("reservoir");
    let mut replay_rng = root.child("replay");
    let mut head_rng = root.child("head-init");
    let mut epoch_rng = root.child("epochs");

    let mut net_cfg = cfg.net.clone();
    net_cfg.init_seed = net_seed(seed);
    let mut net = EmbeddingNetwork::new(net_cfg)?;
    let mut head = LinearHead::new(cfg.net.latent_dim);
    // Class id per head column, first-seen order.
    let mut head_classes: Vec<usize> = Vec::new();
    let mut class_to_col: BTreeMap<usize, usize> = BTreeMap::new();

    let mut buffer = match cfg.method {
        Method::Finetune => Buffer::None,
        Method::ReservoirCe => Buffer::Global(GlobalReservoir::new(cfg.memory_capacity)),
        Method::CopeCe => Buffer::Balanced(ProtoMemory::new(MemoryConfig {
            capacity: cfg.memory_capacity,
            momentum: cfg.momentum,
            normalize_prototypes: cfg.normalize_prototypes,
            // No prototype updates happen on this path, so the horizon
            // counts stream arrivals inside memory_update.
            stream_only_counts: true,
            latent_dim: cfg.net.latent_dim,
        })?),
        Method::Cope => unreachable!(),
    };

    let batches_per_epoch = stream.num_batches() as u64;
    let total = batches_per_epoch * cfg.epochs as u64;
    let mut accuracy_timeline = Vec::new();
    let mut loss_timeline = Vec::with_capacity(total as usize);
    let mut last_eval = None;
    let mut mid_checkpoint = None;
    let mut seen = 0u64;

    for epoch in 0..cfg.epochs {
        let epoch_stream = if epoch == 0 {
            stream.clone()
        } else {
            stream.reshuffled(epoch_rng.next_u64())
        };
        for batch_idx in 0..epoch_stream.num_batches() {
            let b_n = epoch_stream.batch(batch_idx);
            let replay = buffer.sample(b_n.len(), &mut replay_rng);
            for &y in b_n.labels.iter().chain(replay.iter().map(|e| &e.label)) {
                if !class_to_col.contains_key(&y) {
                    class_to_col.insert(y, head_classes.len());
                    head_classes.push(y);
                    head.grow(&mut head_rng);
                    if let Buffer::Balanced(mem) = &mut buffer {
                        mem.init_class(y, &mut proto_rng)?;
                    }
                }
            }
            let (inputs, labels) = join_batch(&b_n, &replay);
            let head_labels: Vec<usize> = labels.iter().map(|y| class_to_col[y]).collect();

            let mut last_loss = 0.0;
            for _ in 0..cfg.iterations_per_batch {
                let (latent, cache) = net.forward_latent(inputs.view())?;
                let logits = head.logits(latent.view());
                let (loss, d_logits) = cross_entropy_loss(logits.view(), &head_labels)?;
                let (d_latent, d_w, d_b) = head.backward(latent.view(), d_logits.view());
                let grads = net.backward_latent(&cache, d_latent.view())?;
                net.sgd_step(&grads, cfg.learning_rate)?;
                head.sgd_step(&d_w, &d_b, cfg.learning_rate);
                last_loss = loss;
            }

            match &mut buffer {
                Buffer::None => {}
                Buffer::Balanced(mem) => {
                    mem.memory_update(b_n.inputs.view(), &b_n.labels, &mut reservoir_rng)?
                }
                Buffer::Global(res) => {
                    for (row, &y) in b_n.inputs.rows().into_iter().zip(&b_n.labels) {
                        res.observe(row.to_owned(), y, &mut reservoir_rng);
                    }
                }
            }

            seen += 1;
            loss_timeline.push(LossPoint {
                batch: seen,
                loss: last_loss,
                pos_fraction: None,
            });
            if seen % eval_cfg.periodicity == 0 || seen == total {
                let outcome = evaluate(
                    &net,
                    &Classifier::Head {
                        head: &head,
                        classes: &head_classes,
                    },
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
                mid_checkpoint = Some(capture(cfg.method, seen, &net, &buffer, &head, &head_classes));
            }
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
    let final_checkpoint = opts
        .capture_final
        .then(|| capture(cfg.method, total, &net, &buffer, &head, &head_classes));
    Ok(RunOutcome {
        result,
        final_checkpoint,
        mid_checkpoint,
    })
}

fn capture(
    method: Method,
    batches_seen: u64,
    net: &EmbeddingNetwork,
    buffer: &Buffer,
    head: &LinearHead,
    head_classes: &[usize],
) -> Checkpoint {
    let memory = match buffer {
        Buffer::Balanced(mem) => Some(mem),
        _ => None,
    };
    Checkpoint::capture(method, batches_seen, net, memory, Some((head, head_classes)))
}
