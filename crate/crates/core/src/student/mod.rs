//! The distilled student: hashed n-gram features and a logistic model.

mod features;
mod model;
mod persist;
mod train;

pub use features::{feature_index, featurize, ngrams, tokens, FeatureConfig};
pub use model::{label_for_score, sigmoid, softplus, StudentModel, LABEL_CONVENTION, MODEL_VERSION};
pub use persist::{load_model, model_from_bytes, model_to_bytes, save_model, MAGIC};
pub use train::{accuracy, loss_and_gradient, train, training_fingerprint, Example, Gradient, TrainConfig, TrainReport};

#[derive(Debug, thiserror::Error)]
pub enum StudentError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("batch is empty")]
    EmptyBatch,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("weights have length {weights}, feature config expects {hash_dim}")]
    DimensionMismatch { weights: usize, hash_dim: usize },
    #[error("training diverged in epoch {epoch} (loss {loss})")]
    Diverged { epoch: usize, loss: f64 },
    #[error("model file version {found} is not supported, this build reads version {expected}")]
    VersionMismatch { found: String, expected: String },
    #[error("corrupt model file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
