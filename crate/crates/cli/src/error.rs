use coldrec::dataset::DatasetError;
use coldrec::model::ModelError;
use coldrec::training::{CheckpointError, TrainError};

/// Command failures, each tied to a stable process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad config, flags or overrides.
    #[error("config: {0}")]
    Config(String),
    /// Missing or unreadable input.
    #[error("{0}")]
    Input(String),
    /// Malformed input content.
    #[error("{0}")]
    Parse(String),
    /// Hash, schema or layout mismatch between artifacts.
    #[error("integrity: {0}")]
    Integrity(String),
    /// Anything else that stops a run, such as divergence.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Parse(_) => 3,
            CliError::Integrity(_) => 4,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        let msg = e.to_string();
        if e.is_parse() {
            return CliError::Parse(msg);
        }
        match e.root() {
            DatasetError::Io { .. } => CliError::Input(msg),
            _ => CliError::Integrity(msg),
        }
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        let msg = format!("checkpoint: {e}");
        match e {
            CheckpointError::Io { .. } => CliError::Input(msg),
            CheckpointError::Manifest(_) => CliError::Parse(msg),
            CheckpointError::Version { .. }
            | CheckpointError::Corrupt { .. }
            | CheckpointError::SchemaMismatch { .. } => CliError::Integrity(msg),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::Dataset(e) => e.into(),
            TrainError::Checkpoint(e) => e.into(),
            TrainError::Config(m) => CliError::Config(m),
            TrainError::Model(ModelError::Config(m)) => CliError::Config(m),
            TrainError::Model(e @ ModelError::Schema(_)) => CliError::Integrity(e.to_string()),
            e => CliError::Failed(e.to_string()),
        }
    }
}

pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}
