//! Classifier, training loop, evaluation and checkpoints.

mod checkpoint;
mod eval;
mod network;
mod optim;
mod train;

pub use checkpoint::{Checkpoint, FORMAT_VERSION, MAGIC};
pub use eval::{evaluate, id_accuracy, records, ScoredSample};
pub use network::{Forward, Mlp};
pub use optim::{cosine_lr, Sgd};
pub use train::{
    batch_gradient, sample_stats, static_objective, train, EpochLog, LossMode, Trainer, TrainingConfig, DEFAULT_FIXED_T,
};
