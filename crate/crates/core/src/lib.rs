//! Learned model selection for zero-shot cross-lingual transfer.
//!
//! Given a pool of fine-tuned multilingual models described by feature
//! vectors, learn a pairwise ranking function from small dev sets in pivot
//! languages and use it to pick the model most likely to transfer best to an
//! unseen target language.

pub mod data;
pub mod error;
pub mod eval;
pub mod inputs;
pub mod ranking;
pub mod scorer;
pub mod selection;
pub mod synth;

pub use error::{Error, Result};
