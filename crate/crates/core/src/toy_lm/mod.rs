//! A desk-scale next-token model for exercising the weighted training loss.
//!
//! The model is a single causal self-attention block with a tanh
//! feed-forward layer, trained with teacher forcing on (prompt, target)
//! pairs. Only target tokens (and the closing EOS) contribute to the loss;
//! target tokens that belong to the pair's detail set get weight `lambda`.

mod checkpoint;
mod corpus;
mod model;
mod train;
mod vocab;

use thiserror::Error;

use crate::attention::{AttentionError, DetailTokenSet, TokenSequence};

pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use corpus::{benchmark_corpus, benchmark_train_config, synthetic_corpus, SyntheticSpec, BENCHMARK_SEEDS};
pub use model::{Layout, ModelConfig, ToyLmModel};
pub use train::{
    analytic_gradient, detail_recall, gradient_check, greedy_decode, lambda_benchmark, pair_loss, plain_loss,
    recall_of_decode, train, train_with_vocab, BenchmarkReport, BenchmarkRun, TrainConfig, TrainOutput,
};
pub use vocab::{build_vocab, Vocab, BOS, EOS, PAD, UNK};

#[derive(Debug, Error, PartialEq)]
pub enum ToyLmError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("context of {len} tokens exceeds window {window}")]
    ContextOverflow { len: usize, window: usize },
    #[error("loss became non-finite at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("evaluation pair {index} has no detail tokens in its target")]
    NoDetailTokens { index: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Loss(#[from] AttentionError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingPair {
    pub prompt_tokens: TokenSequence,
    pub target_tokens: TokenSequence,
    pub detail_set: DetailTokenSet,
}

impl TrainingPair {
    pub fn new(
        prompt_tokens: TokenSequence,
        target_tokens: TokenSequence,
        detail_set: DetailTokenSet,
    ) -> Result<Self, ToyLmError> {
        if target_tokens.is_empty() {
            return Err(ToyLmError::Config("training pair target must be non-empty".into()));
        }
        Ok(TrainingPair {
            prompt_tokens,
            target_tokens,
            detail_set,
        })
    }

    /// Distinct target tokens that are detail tokens.
    pub fn target_details(&self) -> std::collections::BTreeSet<&str> {
        self.target_tokens
            .tokens
            .iter()
            .filter(|t| self.detail_set.contains(t))
            .map(String::as_str)
            .collect()
    }
}
