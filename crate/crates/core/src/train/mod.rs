//! Losses, analytical gradients, Adam, and the training loop.

mod batch;
mod dataset;
mod loss;
mod optimizer;
mod trainer;

pub use batch::{backward, loss_and_grad, total_loss, LossBreakdown, PairExample, TrainingBatch};
pub use dataset::{
    edge_class_splits, link_splits, read_pairs, sample_negatives, split_pairs, write_pairs, ExampleBuilder, LabeledPair,
    PairSplits,
};
pub use loss::{bce, cosine, focal, inverse_frequency_alpha, nt_xent, LossConfig};
pub use optimizer::{optimizer_step, AdamConfig, OptimizerState};
pub use trainer::{score_examples, task_auc, train, EpochLog, TrainConfig, TrainOutcome};
