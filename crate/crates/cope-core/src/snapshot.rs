//! Versioned checkpoint format: JSON envelope with parameters stored as
//! base64-encoded little-endian f64 arrays, so round-trips are bit exact.

use std::collections::BTreeMap;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::agents::Method;
use crate::embed_net::{EmbeddingNetwork, LinearHead, NetConfig};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};
use crate::proto_memory::{Exemplar, MemoryConfig, ProtoMemory};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EncodedMatrix {
    rows: usize,
    cols: usize,
    data: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EncodedVector {
    len: usize,
    data: String,
}

fn encode_f64s<'a>(values: impl Iterator<Item = &'a f64>) -> String {
    let mut bytes = Vec::new();
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    B64.encode(bytes)
}

fn decode_f64s(data: &str, expected: usize) -> Result<Vec<f64>> {
    let bytes = B64
        .decode(data)
        .map_err(|e| Error::InvalidConfig(format!("corrupt parameter payload: {e}")))?;
    if bytes.len() != expected * 8 {
        return Err(Error::InvalidConfig(format!(
            "parameter payload holds {} bytes, expected {}",
            bytes.len(),
            expected * 8
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]))
        .collect())
}

fn encode_matrix(m: &Matrix) -> EncodedMatrix {
    EncodedMatrix {
        rows: m.nrows(),
        cols: m.ncols(),
        data: encode_f64s(m.iter()),
    }
}

fn decode_matrix(e: &EncodedMatrix) -> Result<Matrix> {
    let values = decode_f64s(&e.data, e.rows * e.cols)?;
    Matrix::from_shape_vec((e.rows, e.cols), values)
        .map_err(|err| Error::InvalidConfig(err.to_string()))
}

fn encode_vector(v: &Vector) -> EncodedVector {
    EncodedVector {
        len: v.len(),
        data: encode_f64s(v.iter()),
    }
}

fn decode_vector(e: &EncodedVector) -> Result<Vector> {
    Ok(Vector::from(decode_f64s(&e.data, e.len)?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NetSnapshot {
    config: NetConfig,
    weights: Vec<EncodedMatrix>,
    biases: Vec<EncodedVector>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HeadSnapshot {
    weight: EncodedMatrix,
    bias: EncodedVector,
    /// Class id of each head column, first-seen order.
    classes: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MemorySnapshot {
    config: MemoryConfig,
    observed: Vec<usize>,
    counts: Vec<(usize, u64)>,
    prototypes: Vec<(usize, EncodedVector)>,
    exemplars: Vec<(usize, Vec<EncodedVector>)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub method: Method,
    pub batches_seen: u64,
    net: NetSnapshot,
    head: Option<HeadSnapshot>,
    memory: Option<MemorySnapshot>,
}

/// Learner state rebuilt from a checkpoint, ready for evaluation or resume.
pub struct Restored {
    pub method: Method,
    pub net: EmbeddingNetwork,
    pub memory: Option<ProtoMemory>,
    pub head: Option<(LinearHead, Vec<usize>)>,
    pub batches_seen: u64,
}

impl Checkpoint {
    pub fn capture(
        method: Method,
        batches_seen: u64,
        net: &EmbeddingNetwork,
        memory: Option<&ProtoMemory>,
        head: Option<(&LinearHead, &[usize])>,
    ) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            method,
            batches_seen,
            net: NetSnapshot {
                config: net.config().clone(),
                weights: net.weights().iter().map(encode_matrix).collect(),
                biases: net.biases().iter().map(encode_vector).collect(),
            },
            head: head.map(|(h, classes)| HeadSnapshot {
                weight: encode_matrix(h.weight()),
                bias: encode_vector(h.bias()),
                classes: classes.to_vec(),
            }),
            memory: memory.map(|m| MemorySnapshot {
                config: m.config().clone(),
                observed: m.observed().to_vec(),
                counts: m.counts().iter().map(|(&k, &v)| (k, v)).collect(),
                prototypes: m
                    .prototypes()
                    .iter()
                    .map(|(&k, v)| (k, encode_vector(v)))
                    .collect(),
                exemplars: m
                    .exemplars()
                    .iter()
                    .map(|(&k, buf)| (k, buf.iter().map(|e| encode_vector(&e.input)).collect()))
                    .collect(),
            }),
        }
    }

    pub fn restore(&self) -> Result<Restored> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::VersionMismatch {
                expected: CHECKPOINT_VERSION,
                found: self.version.to_string(),
            });
        }
        let weights = self
            .net
            .weights
            .iter()
            .map(decode_matrix)
            .collect::<Result<Vec<_>>>()?;
        let biases = self
            .net
            .biases
            .iter()
            .map(decode_vector)
            .collect::<Result<Vec<_>>>()?;
        let net = EmbeddingNetwork::from_params(self.net.config.clone(), weights, biases)?;
        let memory = match &self.memory {
            None => None,
            Some(snap) => {
                let prototypes: BTreeMap<usize, Vector> = snap
                    .prototypes
                    .iter()
                    .map(|(k, v)| Ok((*k, decode_vector(v)?)))
                    .collect::<Result<_>>()?;
                let exemplars: BTreeMap<usize, Vec<Exemplar>> = snap
                    .exemplars
                    .iter()
                    .map(|(k, buf)| {
                        let items = buf
                            .iter()
                            .map(|v| {
                                Ok(Exemplar {
                                    input: decode_vector(v)?,
                                    label: *k,
                                })
                            })
                            .collect::<Result<Vec<_>>>()?;
                        Ok((*k, items))
                    })
                    .collect::<Result<_>>()?;
                Some(ProtoMemory::from_parts(
                    snap.config.clone(),
                    snap.observed.clone(),
                    prototypes,
                    exemplars,
                    snap.counts.iter().copied().collect(),
                )?)
            }
        };
        let head = match &self.head {
            None => None,
            Some(snap) => Some((
                LinearHead::from_params(decode_matrix(&snap.weight)?, decode_vector(&snap.bias)?)?,
                snap.classes.clone(),
            )),
        };
        Ok(Restored {
            method: self.method,
            net,
            memory,
            head,
            batches_seen: self.batches_seen,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        // Check the version before strict decoding so older or foreign
        // files report a version mismatch rather than a parse error.
        let value: serde_json::Value = serde_json::from_str(&text)?;
        match value.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(CHECKPOINT_VERSION) => {}
            found => {
                return Err(Error::VersionMismatch {
                    expected: CHECKPOINT_VERSION,
                    found: found.map_or_else(|| "missing".to_string(), |v| v.to_string()),
                })
            }
        }
        Ok(serde_json::from_value(value)?)
    }
}
