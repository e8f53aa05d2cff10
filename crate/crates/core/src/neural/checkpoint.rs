//! Binary model checkpoints.
//!
//! Layout: 8 magic bytes, `u32` format version, `u64` header length, a JSON
//! header, then every tensor as little-endian `f64` in header order.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::model::{FusionModel, ModelConfig, Parameters};
use super::NeuralError;

pub const MAGIC: &[u8; 8] = b"STKMODEL";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Header {
    model_config: ModelConfig,
    config_hash: String,
    tensors: Vec<TensorEntry>,
    #[serde(default)]
    metadata: BTreeMap<String, serde_json::Value>,
}

/// A loaded model plus the free-form metadata saved with it.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: FusionModel,
    pub metadata: BTreeMap<String, serde_json::Value>,
}

/// Hex sha256 of the canonical JSON form of `config`.
pub fn config_hash(config: &ModelConfig) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    hex::encode(Sha256::digest(bytes))
}

pub fn to_bytes(model: &FusionModel, metadata: &BTreeMap<String, serde_json::Value>) -> Vec<u8> {
    let header = Header {
        model_config: model.config.clone(),
        config_hash: config_hash(&model.config),
        tensors: model
            .params
            .shapes()
            .into_iter()
            .map(|(name, shape)| TensorEntry { name: name.to_string(), shape })
            .collect(),
        metadata: metadata.clone(),
    };
    let header = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for (_, t) in model.params.tensors() {
        for x in t {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

fn take<'a>(bytes: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8], NeuralError> {
    if bytes.len() < n {
        return Err(NeuralError::Corrupt(format!("truncated while reading {what}")));
    }
    let (head, rest) = bytes.split_at(n);
    *bytes = rest;
    Ok(head)
}

pub fn from_bytes(mut bytes: &[u8]) -> Result<Checkpoint, NeuralError> {
    let magic = take(&mut bytes, MAGIC.len(), "magic")?;
    if magic != MAGIC {
        return Err(NeuralError::Corrupt("not a model checkpoint".into()));
    }
    let version = u32::from_le_bytes(take(&mut bytes, 4, "version")?.try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(NeuralError::VersionMismatch { found: version, expected: CHECKPOINT_VERSION });
    }
    let header_len = u64::from_le_bytes(take(&mut bytes, 8, "header length")?.try_into().expect("8 bytes"));
    let header_len = usize::try_from(header_len).map_err(|_| NeuralError::Corrupt("header length overflows".into()))?;
    let header: Header = serde_json::from_slice(take(&mut bytes, header_len, "header")?)
        .map_err(|e| NeuralError::Corrupt(format!("bad header: {e}")))?;
    if config_hash(&header.model_config) != header.config_hash {
        return Err(NeuralError::Corrupt("config hash does not match header".into()));
    }
    let mut model = FusionModel::zeros(header.model_config.clone())
        .map_err(|e| NeuralError::Corrupt(format!("header config: {e}")))?;
    let expected: Vec<(&str, Vec<usize>)> = model.params.shapes();
    let listed: Vec<(&str, &[usize])> = header.tensors.iter().map(|t| (t.name.as_str(), t.shape.as_slice())).collect();
    let consistent = expected.len() == listed.len()
        && expected.iter().zip(&listed).all(|((n, s), (ln, ls))| n == ln && s.as_slice() == *ls);
    if !consistent {
        return Err(NeuralError::Corrupt("tensor table disagrees with the model config".into()));
    }
    for (name, t) in model.params.tensors_mut() {
        let raw = take(&mut bytes, t.len() * 8, name)?;
        for (x, chunk) in t.iter_mut().zip(raw.chunks_exact(8)) {
            *x = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        }
    }
    if !bytes.is_empty() {
        return Err(NeuralError::Corrupt(format!("{} trailing bytes", bytes.len())));
    }
    Ok(Checkpoint { model, metadata: header.metadata })
}

pub fn save_model(path: &Path, model: &FusionModel, metadata: &BTreeMap<String, serde_json::Value>) -> Result<(), NeuralError> {
    std::fs::write(path, to_bytes(model, metadata))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Checkpoint, NeuralError> {
    from_bytes(&std::fs::read(path)?)
}

/// Loads a checkpoint and checks that its tensors fit a run configured as `expected`.
pub fn load_model_for(path: &Path, expected: &ModelConfig) -> Result<Checkpoint, NeuralError> {
    let ckpt = load_model(path)?;
    check_dimensions(&ckpt.model.params, &Parameters::zeros(expected))?;
    if ckpt.model.config.task != expected.task {
        return Err(NeuralError::InvalidConfig(format!(
            "checkpoint is for the {} task, run expects {}",
            ckpt.model.config.task.as_str(),
            expected.task.as_str()
        )));
    }
    Ok(ckpt)
}

fn check_dimensions(found: &Parameters, expected: &Parameters) -> Result<(), NeuralError> {
    for ((name, f), (_, e)) in found.shapes().into_iter().zip(expected.shapes()) {
        if f != e {
            return Err(NeuralError::DimensionMismatch { tensor: name.to_string(), expected: e, found: f });
        }
    }
    Ok(())
}
