//! Negative sampling, Adam, the training loop and checkpoints.

mod adam;
mod checkpoint;
mod sampling;
mod trainer;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CheckpointError,
    CheckpointManifest, TensorEntry, CHECKPOINT_VERSION, MANIFEST_FILE, TENSORS_FILE,
};
pub use sampling::{sample_negatives, REJECTION_FACTOR};
pub use trainer::{
    train, EpochRecord, TrainConfig, TrainCounters, TrainOutcome, TrainingView,
    VALIDATION_K, VALIDATION_NEGATIVES,
};

use crate::dataset::DatasetError;
use crate::model::ModelError;

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("non-finite loss at epoch {epoch}, batch {batch}: {detail}")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        detail: String,
    },
    #[error("non-finite gradient in `{param}` (element {element}) at step {step}")]
    NonFiniteGradient {
        param: String,
        element: usize,
        step: u64,
    },
}

impl From<crate::autodiff::AutodiffError> for TrainError {
    fn from(e: crate::autodiff::AutodiffError) -> Self {
        TrainError::Model(e.into())
    }
}

impl TrainError {
    pub fn is_divergence(&self) -> bool {
        matches!(
            self,
            TrainError::NonFiniteLoss { .. } | TrainError::NonFiniteGradient { .. }
        )
    }
}

/// `epoch,train_loss,val_hr10` CSV.
pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,train_loss,val_hr10\n");
    for r in history {
        out.push_str(&format!("{},{},{}\n", r.epoch, r.train_loss, r.val_hr10));
    }
    out
}
