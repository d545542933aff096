//! Data sources and stream construction: datasets, task-ordered
//! data-incremental streams (balanced, imbalanced, or iid-shuffled), and the
//! held-out evaluation split. A stream batch carries samples only — there is
//! no task identifier for a learner to read.

mod idx;
mod synth;

pub use idx::parse_idx;
pub use synth::synth_gaussians;

use std::sync::Arc;

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

/// A labeled dataset with inputs scaled to [0, 1] and contiguous 0-based
/// class ids.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub inputs: Matrix,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, inputs: Matrix, labels: Vec<usize>) -> Result<Self> {
        if inputs.nrows() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} input rows vs {} labels",
                inputs.nrows(),
                labels.len()
            )));
        }
        if !labels.is_empty() {
            let max = *labels.iter().max().expect("non-empty");
            let mut seen = vec![false; max + 1];
            for &y in &labels {
                seen[y] = true;
            }
            if !seen.iter().all(|&s| s) {
                return Err(Error::InvalidConfig(
                    "labels must cover a contiguous 0-based range".into(),
                ));
            }
        }
        Ok(Self {
            name: name.into(),
            inputs,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |&m| m + 1)
    }
}

/// Declarative description of a data-incremental stream.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamSpec {
    /// Ordered tasks, each a disjoint set of class ids.
    pub tasks: Vec<Vec<usize>>,
    /// Per-task sample caps applied after the within-task shuffle; `None`
    /// keeps every sample.
    pub task_caps: Option<Vec<usize>>,
    pub batch_size: usize,
    pub shuffle_within_task: bool,
    /// Globally shuffle everything, erasing task order (iid baselines).
    pub iid: bool,
    pub seed: u64,
}

impl StreamSpec {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if let Some(caps) = &self.task_caps {
            if caps.len() != self.tasks.len() {
                return Err(Error::InvalidConfig(format!(
                    "{} caps for {} tasks",
                    caps.len(),
                    self.tasks.len()
                )));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for task in &self.tasks {
            for &c in task {
                if !seen.insert(c) {
                    return Err(Error::InvalidConfig(format!(
                        "class {c} appears in more than one task"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One processing batch: samples only, deliberately no task information.
#[derive(Debug, Clone)]
pub struct StreamBatch {
    pub inputs: Matrix,
    pub labels: Vec<usize>,
}

impl StreamBatch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// A fully ordered training stream plus its held-out evaluation split.
#[derive(Debug, Clone)]
pub struct Stream {
    dataset: Arc<Dataset>,
    eval: Arc<Dataset>,
    order: Vec<u32>,
    batch_size: usize,
    spec: StreamSpec,
}

impl Stream {
    pub fn num_batches(&self) -> usize {
        self.order.len().div_ceil(self.batch_size)
    }

    pub fn num_samples(&self) -> usize {
        self.order.len()
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn spec(&self) -> &StreamSpec {
        &self.spec
    }

    pub fn eval(&self) -> &Arc<Dataset> {
        &self.eval
    }

    pub fn train(&self) -> &Arc<Dataset> {
        &self.dataset
    }

    pub fn batch(&self, index: usize) -> StreamBatch {
        let start = index * self.batch_size;
        let end = (start + self.batch_size).min(self.order.len());
        let ids = &self.order[start..end];
        let mut inputs = Array2::zeros((ids.len(), self.dataset.input_dim()));
        let mut labels = Vec::with_capacity(ids.len());
        for (row, &id) in ids.iter().enumerate() {
            inputs
                .index_axis_mut(Axis(0), row)
                .assign(&self.dataset.inputs.row(id as usize));
            labels.push(self.dataset.labels[id as usize]);
        }
        StreamBatch { inputs, labels }
    }

    pub fn batches(&self) -> impl Iterator<Item = StreamBatch> + '_ {
        (0..self.num_batches()).map(|i| self.batch(i))
    }

    /// Same data under a fresh global shuffle (extra epochs of the iid
    /// baselines).
    pub fn reshuffled(&self, seed: u64) -> Stream {
        let mut order = self.order.clone();
        Rng::from_seed(seed).child("stream-epoch").shuffle(&mut order);
        Stream {
            dataset: Arc::clone(&self.dataset),
            eval: Arc::clone(&self.eval),
            order,
            batch_size: self.batch_size,
            spec: self.spec.clone(),
        }
    }

    /// Sample order as dataset indices (test hook).
    pub fn order(&self) -> &[u32] {
        &self.order
    }
}

/// Assemble a stream: tasks in spec order, seeded within-task shuffles,
/// per-task caps taken after the shuffle, or one global shuffle when `iid`.
pub fn build_stream(train: Arc<Dataset>, eval: Arc<Dataset>, spec: &StreamSpec) -> Result<Stream> {
    spec.validate()?;
    let num_classes = train.num_classes();
    for task in &spec.tasks {
        for &c in task {
            if c >= num_classes {
                return Err(Error::UnknownClass(c));
            }
        }
    }
    let rng = Rng::from_seed(spec.seed);
    let mut order: Vec<u32> = Vec::new();
    for (t, task) in spec.tasks.iter().enumerate() {
        let mut ids: Vec<u32> = (0..train.len() as u32)
            .filter(|&i| task.contains(&train.labels[i as usize]))
            .collect();
        if spec.shuffle_within_task {
            rng.child(&format!("task-{t}")).shuffle(&mut ids);
        }
        if let Some(caps) = &spec.task_caps {
            let cap = caps[t];
            if cap > ids.len() {
                return Err(Error::CapExceedsAvailable {
                    task: t,
                    cap,
                    available: ids.len(),
                });
            }
            ids.truncate(cap);
        }
        order.extend_from_slice(&ids);
    }
    if spec.iid {
        rng.child("iid").shuffle(&mut order);
    }
    Ok(Stream {
        dataset: train,
        eval,
        order,
        batch_size: spec.batch_size,
        spec: spec.clone(),
    })
}

/// The five digit-pair tasks of the split-MNIST benchmark.
pub fn split_mnist_tasks() -> Vec<Vec<usize>> {
    (0..5).map(|t| vec![2 * t, 2 * t + 1]).collect()
}
