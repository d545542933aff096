use std::path::PathBuf;

/// Errors shared by every module in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate-norm: cannot L2-normalize a zero vector")]
    DegenerateNorm,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("unknown class {0}")]
    UnknownClass(usize),
    #[error("class {0} is already initialized")]
    DuplicateClass(usize),
    #[error("repellor pair must span two classes, both instances have class {0}")]
    SameClassPair(usize),
    #[error("no classes observed yet")]
    NoClasses,
    #[error("bad-magic in {path}: expected {expected:#010x}, found {found:#010x}")]
    BadMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },
    #[error("truncated file {path}: needed {needed} bytes, found {found}")]
    Truncated {
        path: PathBuf,
        needed: usize,
        found: usize,
    },
    #[error("count mismatch: {images} images vs {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("task {task} cap {cap} exceeds the {available} available samples")]
    CapExceedsAvailable {
        task: usize,
        cap: usize,
        available: usize,
    },
    #[error("no evaluation samples carry an observed label")]
    EmptyEvalIntersection,
    #[error("stale activation cache: {0}")]
    StaleCache(String),
    #[error("checkpoint version mismatch: expected {expected}, found {found}")]
    VersionMismatch { expected: u32, found: String },
    #[error("non-finite value produced in {0}")]
    NonFinite(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("run '{name}' (seed {seed}) failed: {source}")]
    RunFailed {
        name: String,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
