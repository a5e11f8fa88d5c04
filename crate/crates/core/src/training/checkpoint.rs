//! Checkpoints: a JSON manifest plus a flat little-endian `f64` blob.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::autodiff::{Init, ParamSet, Tensor};

use super::{EpochRecord, TrainConfig};

pub const CHECKPOINT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const TENSORS_FILE: &str = "tensors.bin";

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("manifest: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error("checkpoint format version {found}, expected {expected}")]
    Version { found: u32, expected: u32 },
    #[error("corrupt checkpoint at byte {offset}: {detail}")]
    Corrupt { offset: u64, detail: String },
    #[error("checkpoint schema {found} does not match dataset schema {expected}")]
    SchemaMismatch { expected: String, found: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorEntry {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    /// Byte offset into the tensor blob.
    pub offset: u64,
    pub init: Init,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointManifest {
    pub format_version: u32,
    pub train_config: TrainConfig,
    pub schema_hash: String,
    pub tensors: Vec<TensorEntry>,
    pub history: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
}

impl CheckpointManifest {
    pub fn new(
        train_config: TrainConfig,
        schema_hash: impl Into<String>,
        history: Vec<EpochRecord>,
        best_epoch: Option<usize>,
    ) -> Self {
        Self {
            format_version: CHECKPOINT_VERSION,
            train_config,
            schema_hash: schema_hash.into(),
            tensors: Vec::new(),
            history,
            best_epoch,
        }
    }

    pub fn require_schema(&self, schema_hash: &str) -> Result<(), CheckpointError> {
        if self.schema_hash != schema_hash {
            return Err(CheckpointError::SchemaMismatch {
                expected: schema_hash.to_string(),
                found: self.schema_hash.clone(),
            });
        }
        Ok(())
    }
}

/// Serializes tensors into the blob and fills the manifest's tensor index.
pub fn encode_checkpoint(params: &ParamSet, manifest: &CheckpointManifest) -> (String, Vec<u8>) {
    let mut manifest = manifest.clone();
    manifest.tensors.clear();
    let mut blob = Vec::new();
    for (name, p) in params.iter() {
        manifest.tensors.push(TensorEntry {
            name: name.to_string(),
            rows: p.value.rows(),
            cols: p.value.cols(),
            offset: blob.len() as u64,
            init: p.init,
        });
        for v in p.value.data() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
    }
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    (json, blob)
}

/// Parses a manifest and blob back into parameters.
pub fn decode_checkpoint(
    manifest_json: &str,
    blob: &[u8],
) -> Result<(ParamSet, CheckpointManifest), CheckpointError> {
    let manifest: CheckpointManifest = serde_json::from_str(manifest_json)?;
    if manifest.format_version != CHECKPOINT_VERSION {
        return Err(CheckpointError::Version {
            found: manifest.format_version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let mut params = ParamSet::new();
    let mut expected_offset = 0u64;
    for entry in &manifest.tensors {
        let corrupt = |offset: u64, detail: String| CheckpointError::Corrupt { offset, detail };
        if entry.offset != expected_offset {
            return Err(corrupt(
                entry.offset,
                format!("`{}` starts at {}, expected {expected_offset}", entry.name, entry.offset),
            ));
        }
        let len = entry
            .rows
            .checked_mul(entry.cols)
            .and_then(|n| n.checked_mul(8))
            .ok_or_else(|| corrupt(entry.offset, format!("`{}` shape overflows", entry.name)))?;
        let start = usize::try_from(entry.offset)
            .map_err(|_| corrupt(entry.offset, "offset overflows".into()))?;
        let end = start
            .checked_add(len)
            .ok_or_else(|| corrupt(entry.offset, "length overflows".into()))?;
        if end > blob.len() {
            return Err(corrupt(
                blob.len() as u64,
                format!("`{}` needs bytes {start}..{end}, blob has {}", entry.name, blob.len()),
            ));
        }
        let mut data = Vec::with_capacity(len / 8);
        for (k, chunk) in blob[start..end].chunks_exact(8).enumerate() {
            let v = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
            if !v.is_finite() {
                return Err(corrupt(
                    (start + 8 * k) as u64,
                    format!("non-finite value in `{}`", entry.name),
                ));
            }
            data.push(v);
        }
        let tensor = Tensor::from_vec(entry.rows, entry.cols, data)
            .map_err(|e| corrupt(entry.offset, e.to_string()))?;
        params
            .insert(entry.name.clone(), tensor, entry.init)
            .map_err(|e| corrupt(entry.offset, e.to_string()))?;
        expected_offset = end as u64;
    }
    if expected_offset != blob.len() as u64 {
        return Err(CheckpointError::Corrupt {
            offset: expected_offset,
            detail: format!("{} trailing bytes", blob.len() as u64 - expected_offset),
        });
    }
    Ok((params, manifest))
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CheckpointError + '_ {
    move |source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `manifest.json` and `tensors.bin` under `dir`.
pub fn save_checkpoint(
    dir: &Path,
    params: &ParamSet,
    manifest: &CheckpointManifest,
) -> Result<Vec<PathBuf>, CheckpointError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let (json, blob) = encode_checkpoint(params, manifest);
    let blob_path = dir.join(TENSORS_FILE);
    let manifest_path = dir.join(MANIFEST_FILE);
    fs::write(&blob_path, blob).map_err(io_err(&blob_path))?;
    fs::write(&manifest_path, json).map_err(io_err(&manifest_path))?;
    Ok(vec![manifest_path, blob_path])
}

pub fn load_checkpoint(dir: &Path) -> Result<(ParamSet, CheckpointManifest), CheckpointError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let blob_path = dir.join(TENSORS_FILE);
    let json = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
    let blob = fs::read(&blob_path).map_err(io_err(&blob_path))?;
    decode_checkpoint(&json, &blob)
}
