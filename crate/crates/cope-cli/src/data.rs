//! Dataset resolution for the configured source. MNIST IDX files are read
//! from `COPE_DATA_DIR` (default `data/mnist`); downloading is out of
//! band.

use std::path::PathBuf;
use std::sync::Arc;

use cope_core::streams::{parse_idx, split_mnist_tasks, synth_gaussians, Dataset, StreamSpec};

use crate::config::{SourceConfig, StreamConfig};
use crate::{CliError, CliResult};

pub struct DataPair {
    pub train: Arc<Dataset>,
    pub eval: Arc<Dataset>,
}

pub fn mnist_dir() -> PathBuf {
    std::env::var_os("COPE_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data/mnist"))
}

const MNIST_FILES: [&str; 4] = [
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
];

pub fn load(source: &SourceConfig) -> CliResult<DataPair> {
    match source {
        SourceConfig::SplitMnist { .. } => {
            let dir = mnist_dir();
            for file in MNIST_FILES {
                if !dir.join(file).exists() {
                    return Err(CliError::dataset(format!(
                        "missing {} under {} (set COPE_DATA_DIR)",
                        file,
                        dir.display()
                    )));
                }
            }
            let train = parse_idx(
                &dir.join(MNIST_FILES[0]),
                &dir.join(MNIST_FILES[1]),
            )?;
            let eval = parse_idx(&dir.join(MNIST_FILES[2]), &dir.join(MNIST_FILES[3]))?;
            Ok(DataPair {
                train: Arc::new(train),
                eval: Arc::new(eval),
            })
        }
        SourceConfig::Synth {
            classes,
            dim,
            separation,
            train_per_class,
            eval_per_class,
            data_seed,
        } => {
            let train = synth_gaussians(*classes, *dim, *separation, *train_per_class, *data_seed)?;
            // Distinct seed stream for the held-out draw.
            let eval = synth_gaussians(
                *classes,
                *dim,
                *separation,
                *eval_per_class,
                data_seed ^ 0x9e37_79b9_7f4a_7c15,
            )?;
            Ok(DataPair {
                train: Arc::new(train),
                eval: Arc::new(eval),
            })
        }
    }
}

/// Stream spec for the configured source; `focus_override` picks one
/// imbalanced variant when the suite loops over them.
pub fn stream_spec(stream: &StreamConfig, focus_override: Option<usize>) -> StreamSpec {
    let (tasks, task_caps) = match &stream.source {
        SourceConfig::SplitMnist {
            imbalanced_focus_task,
            big_cap,
            small_cap,
        } => {
            let tasks = split_mnist_tasks();
            let focus = focus_override.or(*imbalanced_focus_task);
            let caps = focus.map(|i| {
                (0..tasks.len())
                    .map(|t| if t + 1 == i { *big_cap } else { *small_cap })
                    .collect()
            });
            (tasks, caps)
        }
        SourceConfig::Synth { classes, .. } => {
            ((0..*classes).map(|c| vec![c]).collect(), None)
        }
    };
    StreamSpec {
        tasks,
        task_caps,
        batch_size: stream.batch_size,
        shuffle_within_task: true,
        iid: stream.iid,
        seed: 0,
    }
}
