//! Dual-view fusion classifier with hand-written backpropagation.

pub mod backward;
pub mod checkpoint;
pub mod ensemble;
pub mod loss;
pub mod model;
pub mod optim;
pub mod train;

pub use backward::{backward, batch_loss, BatchLoss};
pub use checkpoint::{load_model, save_model, Checkpoint, CHECKPOINT_VERSION};
pub use ensemble::{assign_folds, kfold_predict, majority_vote, train_folds, FoldEnsemble};
pub use loss::{loss_ce, loss_supcon, loss_weighted, softmax, supcon, Objective};
pub use model::{fusion_combine, fusion_gate, Dropout, FusionModel, ModelConfig, Parameters, Trace};
pub use optim::{adamw_step, AdamW, AdamWState};
pub use train::{train, Dataset, EpochRecord, LossSchedule, TrainConfig, TrainOutcome};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NeuralError {
    #[error("shape mismatch for {what}: expected {expected}, found {found}")]
    Shape { what: &'static str, expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("degenerate contrastive batch")]
    DegenerateContrastiveBatch,
    #[error("empty batch")]
    EmptyBatch,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("i/o error: {0}")]
    Io(String),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("dimension mismatch for {tensor}: checkpoint has {found:?}, run expects {expected:?}")]
    DimensionMismatch { tensor: String, expected: Vec<usize>, found: Vec<usize> },
}

impl From<std::io::Error> for NeuralError {
    fn from(e: std::io::Error) -> Self {
        NeuralError::Io(e.to_string())
    }
}
