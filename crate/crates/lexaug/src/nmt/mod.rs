//! A small, fully deterministic neural translation stack: GRU
//! encoder-decoder with additive attention, hand-derived exact gradients,
//! Adam with cosine annealing, beam-search decoding, and binary
//! checkpoints. Everything runs on one thread in 64-bit floats, and every
//! random choice flows from an explicit seed, so identical inputs
//! reproduce identical parameters, scores, and files.

mod beam;
mod checkpoint;
mod forward;
mod linalg;
mod model;
mod train;

pub use beam::{beam_search, greedy_decode, DecodeConfig, Translator};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError};
pub use forward::{attention_step, backward, encode, forward_loss, Backward, PairIds};
pub use linalg::Mat;
pub use model::{init_model, AttentionParams, GruCell, Model, ModelConfig, Params, NUM_TENSORS};
pub use train::{cosine_lr, train, EvalPoint, TrainConfig, TrainReport};

use thiserror::Error;

/// Contract violations and training failures.
#[derive(Debug, Error)]
pub enum NmtError {
    #[error("token id {id} out of range for vocabulary of size {vocab_size}")]
    TokenIdOutOfRange { id: u32, vocab_size: usize },
    #[error("batch is empty")]
    EmptyBatch,
    #[error("pair with an empty side in batch")]
    EmptySentence,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("dev set is empty")]
    EmptyDevSet,
    #[error("non-finite loss at epoch {epoch}, step {step}; training aborted")]
    NonFiniteLoss { epoch: usize, step: usize },
}
