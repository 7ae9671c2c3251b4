//! The compatibility score `s(m, l)` between a fine-tuned model and a language.
//!
//! Model features and the language embedding each pass through their own
//! two-layer ReLU network; the two outputs meet in a bilinear form
//! `a^T W_bi b`. Without a language embedding the score is `v^T a + c`.
//! Fusion scorers first mix three feature vectors with learned weights, and
//! task-mode scorers append a learned task vector to the language embedding.

mod compute;
pub mod gradcheck;
mod init;
mod io;
mod params;

pub use compute::{
    batch_loss, ffnn_forward, fuse, loss_and_grad, score, score_many, sigmoid, softplus,
    ModelFeatures, ScoredPair, ScorerInput,
};
pub use init::{glorot_bound, init_params, ScorerShape, DEFAULT_HIDDEN, DEFAULT_OUTPUT, DEFAULT_TASK_DIM};
pub use io::{load_params, params_from_str, params_to_string, save_params, PARAMS_HEADER};
pub use params::{Branch, Head, ScorerParams, Tensor, TensorMut};
