//! The evaluating agent: classifies every held-out sample whose label has
//! been observed, without touching learner state.

use ndarray::{Array2, Axis};

use crate::embed_net::{EmbeddingNetwork, LinearHead};
use crate::error::{Error, Result};
use crate::proto_memory::ProtoMemory;
use crate::streams::Dataset;

/// What turns features into predictions.
pub enum Classifier<'a> {
    /// Nearest prototype by cosine similarity.
    Prototypes(&'a ProtoMemory),
    /// Linear head argmax; `classes[col]` is the class id of head column
    /// `col` (first-seen order).
    Head {
        head: &'a LinearHead,
        classes: &'a [usize],
    },
}

impl Classifier<'_> {
    fn observed(&self) -> Vec<usize> {
        match self {
            Classifier::Prototypes(mem) => mem.observed().to_vec(),
            Classifier::Head { classes, .. } => classes.to_vec(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub accuracy: f64,
    /// Rows are true labels, columns predictions, over all dataset classes.
    pub confusion: Vec<Vec<u64>>,
    /// Number of evaluation samples whose label was observed.
    pub evaluated: usize,
}

/// Evaluate a snapshot on the held-out split, restricted to the observed
/// classes. The learner is read-only here; nothing it owns changes.
pub fn evaluate(
    net: &EmbeddingNetwork,
    classifier: &Classifier<'_>,
    eval: &Dataset,
    eval_batch_size: usize,
) -> Result<EvalOutcome> {
    let observed = classifier.observed();
    if observed.is_empty() {
        return Err(Error::NoClasses);
    }
    let keep: Vec<usize> = (0..eval.len())
        .filter(|&i| observed.contains(&eval.labels[i]))
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyEvalIntersection);
    }
    let k = eval.num_classes();
    let mut confusion = vec![vec![0u64; k]; k];
    let mut correct = 0usize;
    for chunk in keep.chunks(eval_batch_size.max(1)) {
        let mut inputs = Array2::zeros((chunk.len(), eval.input_dim()));
        for (row, &i) in chunk.iter().enumerate() {
            inputs.index_axis_mut(Axis(0), row).assign(&eval.inputs.row(i));
        }
        let predictions: Vec<usize> = match classifier {
            Classifier::Prototypes(mem) => {
                let (features, _) = net.forward(inputs.view())?;
                mem.classify_batch(features.view())?
            }
            Classifier::Head { head, classes } => {
                let (latent, _) = net.forward_latent(inputs.view())?;
                let logits = head.logits(latent.view());
                logits
                    .rows()
                    .into_iter()
                    .map(|row| {
                        let mut best = 0usize;
                        for (j, &v) in row.iter().enumerate() {
                            if v > row[best] {
                                best = j;
                            }
                        }
                        classes[best]
                    })
                    .collect()
            }
        };
        for (&i, pred) in chunk.iter().zip(predictions) {
            let truth = eval.labels[i];
            confusion[truth][pred] += 1;
            correct += usize::from(pred == truth);
        }
    }
    Ok(EvalOutcome {
        accuracy: correct as f64 / keep.len() as f64,
        confusion,
        evaluated: keep.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed_net::NetConfig;
    use crate::numerics::Rng;
    use crate::proto_memory::{MemoryConfig, ProtoMemory};
    use crate::streams::synth_gaussians;

    fn identity_net() -> EmbeddingNetwork {
        let config = NetConfig {
            input_dim: 2,
            hidden: vec![],
            latent_dim: 2,
            init_seed: 0,
            weight_init_scale: 1.0,
        };
        EmbeddingNetwork::from_params(
            config,
            vec![ndarray::array![[1.0, 0.0], [0.0, 1.0]]],
            vec![ndarray::array![0.0, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn restricts_to_observed_classes() {
        let eval = synth_gaussians(4, 4, 6.0, 25, 3).unwrap();
        let net = {
            let config = NetConfig {
                input_dim: 4,
                hidden: vec![],
                latent_dim: 4,
                init_seed: 1,
                weight_init_scale: 1.0,
            };
            EmbeddingNetwork::new(config).unwrap()
        };
        let mut mem = ProtoMemory::new(MemoryConfig {
            capacity: 10,
            momentum: 0.9,
            normalize_prototypes: true,
            stream_only_counts: false,
            latent_dim: 4,
        })
        .unwrap();
        let mut rng = Rng::from_seed(5);
        mem.init_class(0, &mut rng).unwrap();
        mem.init_class(1, &mut rng).unwrap();
        let out = evaluate(&net, &Classifier::Prototypes(&mem), &eval, 32).unwrap();
        // Only classes {0, 1} are scored.
        assert_eq!(out.evaluated, 50);
        for truth in 2..4 {
            assert!(out.confusion[truth].iter().all(|&c| c == 0));
        }
        // Confusion internal consistency.
        let trace: u64 = (0..4).map(|c| out.confusion[c][c]).sum();
        let total: u64 = out.confusion.iter().flatten().sum();
        assert_eq!(total, 50);
        assert!((out.accuracy - trace as f64 / total as f64).abs() < 1e-12);
    }

    #[test]
    fn perfect_prototypes_score_one() {
        // Two point-mass classes along the axes; prototypes placed exactly.
        let net = identity_net();
        let inputs = ndarray::array![[1.0, 0.0], [1.0, 0.1], [0.0, 1.0], [0.1, 1.0]];
        let eval = Dataset::new("axes", inputs, vec![0, 0, 1, 1]).unwrap();
        let mut mem = ProtoMemory::new(MemoryConfig {
            capacity: 4,
            momentum: 0.0,
            normalize_prototypes: true,
            stream_only_counts: false,
            latent_dim: 2,
        })
        .unwrap();
        let mut rng = Rng::from_seed(6);
        mem.init_class(0, &mut rng).unwrap();
        mem.init_class(1, &mut rng).unwrap();
        mem.prototype_update(ndarray::array![[1.0, 0.0]].view(), &[0]).unwrap();
        mem.prototype_update(ndarray::array![[0.0, 1.0]].view(), &[1]).unwrap();
        let out = evaluate(&net, &Classifier::Prototypes(&mem), &eval, 2).unwrap();
        assert_eq!(out.accuracy, 1.0);
    }

    #[test]
    fn evaluation_leaves_state_untouched() {
        let eval = synth_gaussians(2, 4, 6.0, 10, 9).unwrap();
        let net = EmbeddingNetwork::new(NetConfig {
            input_dim: 4,
            hidden: vec![8],
            latent_dim: 4,
            init_seed: 2,
            weight_init_scale: 1.0,
        })
        .unwrap();
        let mut mem = ProtoMemory::new(MemoryConfig {
            capacity: 10,
            momentum: 0.9,
            normalize_prototypes: true,
            stream_only_counts: false,
            latent_dim: 4,
        })
        .unwrap();
        let mut rng = Rng::from_seed(10);
        mem.init_class(0, &mut rng).unwrap();
        mem.init_class(1, &mut rng).unwrap();
        let net_before = net.fingerprint();
        let protos_before: Vec<_> = mem.prototypes().values().cloned().collect();
        let rng_probe_before = rng.clone().next_u64();
        let _ = evaluate(&net, &Classifier::Prototypes(&mem), &eval, 8).unwrap();
        assert_eq!(net.fingerprint(), net_before);
        let protos_after: Vec<_> = mem.prototypes().values().cloned().collect();
        assert_eq!(protos_before, protos_after);
        assert_eq!(rng.clone().next_u64(), rng_probe_before);
    }

    #[test]
    fn empty_intersection_errors() {
        let net = identity_net();
        let inputs = ndarray::array![[1.0, 0.0]];
        let eval = Dataset::new("one", inputs, vec![0]).unwrap();
        let head = LinearHead::new(2);
        let classes: Vec<usize> = vec![];
        assert!(matches!(
            evaluate(&net, &Classifier::Head { head: &head, classes: &classes }, &eval, 4),
            Err(Error::NoClasses)
        ));
    }
}
