//! Dense feed-forward networks, exact backpropagation and Adam.

mod adam;
mod mlp;
pub mod persist;
mod train;

use thiserror::Error;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use mlp::{Activation, Cache, MlpParams, MlpSpec, DEFAULT_LEAK};
pub use persist::{read_networks, write_networks};
pub use train::{rmse_on, train, EpochRecord, Model, Samples, TrainConfig, TrainOutcome};

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("invalid network spec: {0}")]
    Spec(String),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("shape mismatch: expected {expected}, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("training and validation splits must be non-empty")]
    EmptySplit,
    #[error("non-finite loss at epoch {epoch} (train mse {train_mse})")]
    NonFinite { epoch: usize, train_mse: f64 },
    #[error("parameter file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
