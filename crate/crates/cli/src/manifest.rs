//! Per-run manifest: resolved config, seeds, input and artifact digests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_error, CliError};

pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";

/// Git-style object hash: SHA-256 over `blob <len>\0` followed by the bytes.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub bytes: u64,
    pub hash: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<Self, CliError> {
        let data = fs::read(path).map_err(|e| io_error(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            bytes: data.len() as u64,
            hash: blob_hash(&data),
        })
    }
}

/// Tree-style hash over file names and contents, independent of where the
/// files live.
pub fn tree_hash(files: &[FileDigest]) -> String {
    let mut entries: Vec<(String, &str)> = files
        .iter()
        .map(|f| {
            let name = f.path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            (name, f.hash.as_str())
        })
        .collect();
    entries.sort();
    let mut h = Sha256::new();
    for (name, hash) in entries {
        h.update(format!("{name}\0{hash}\n").as_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub data_seed: Option<u64>,
    pub train_seed: Option<u64>,
    pub eval_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seeds: Seeds,
    pub config: serde_json::Value,
    pub input_hash: String,
    pub inputs: Vec<FileDigest>,
    pub artifacts: Vec<FileDigest>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

pub fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

/// Collects inputs and outputs of one command, then writes the manifest.
#[derive(Debug)]
pub struct RunRecord {
    command: String,
    out_dir: PathBuf,
    started: u128,
    inputs: Vec<PathBuf>,
    artifacts: Vec<PathBuf>,
}

impl RunRecord {
    pub fn start(command: &str, out_dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;
        Ok(Self {
            command: command.to_string(),
            out_dir: out_dir.to_path_buf(),
            started: now_ms(),
            inputs: Vec::new(),
            artifacts: Vec::new(),
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    pub fn input(&mut self, path: PathBuf) {
        self.inputs.push(path);
    }

    pub fn artifacts(&mut self, paths: impl IntoIterator<Item = PathBuf>) {
        self.artifacts.extend(paths);
    }

    /// Writes `name` under the output directory and records it.
    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        let path = self.out_dir.join(name);
        fs::write(&path, contents).map_err(|e| io_error(&path, e))?;
        log::info!("wrote {}", path.display());
        self.artifacts.push(path.clone());
        Ok(path)
    }

    /// Hashes every recorded file and writes the manifest via rename.
    pub fn finish(self, seeds: Seeds, config: serde_json::Value) -> Result<PathBuf, CliError> {
        let inputs = self.inputs.iter().map(|p| FileDigest::of(p)).collect::<Result<Vec<_>, _>>()?;
        let artifacts = self.artifacts.iter().map(|p| FileDigest::of(p)).collect::<Result<Vec<_>, _>>()?;
        let manifest = RunManifest {
            command: self.command,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seeds,
            config,
            input_hash: tree_hash(&inputs),
            inputs,
            artifacts,
            started_unix_ms: self.started,
            finished_unix_ms: now_ms(),
        };
        let path = self.out_dir.join(RUN_MANIFEST_FILE);
        let tmp = self.out_dir.join(format!("{RUN_MANIFEST_FILE}.tmp"));
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&tmp, json).map_err(|e| io_error(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| io_error(&path, e))?;
        Ok(path)
    }
}
