//! Gold rankings from dev scores, the pairwise cross-entropy objective, and
//! the training loop.
//!
//! The loss over pairs `(i beats j on l)` is `sum softplus(-(s_i - s_j))`,
//! i.e. `-log sigmoid(s_i - s_j)` in a form that stays finite for large gaps.

mod adam;
mod gold;
mod grid;
mod train;

pub use adam::{adam_step, adam_update, AdamConfig, AdamState};
pub use gold::{
    gold_pairs, gold_pairs_on, pair_languages, pair_prob, pairwise_loss, task_eval_set, training_pairs, GoldPair,
    TrainingSet,
};
pub use grid::{grid_search, meta_dev_criterion, pick_best, GridPoint, GridResult};
pub use train::{
    format_history, train, train_on_pairs, EpochLog, TrainConfig, TrainOutcome, BATCH_SIZE_GRID,
    LEARNING_RATE_GRID,
};
