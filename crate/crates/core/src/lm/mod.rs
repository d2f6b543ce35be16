//! Conditional next-token models over templates or plain text.

mod io;
mod ngram;
mod vocab;

pub use io::{ModelSet, MODEL_FORMAT_VERSION, MODEL_MAGIC};
pub use ngram::{CondNgramModel, ModelConfig};
pub use vocab::{TokenId, Vocab, RESERVED_SLOT_COUNT};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LmError {
    #[error("cannot fit a model on an empty corpus")]
    EmptyCorpus,
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("malformed model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// What a decoder needs from a model.
///
/// `next_distribution` returns one probability per vocabulary id; it must sum
/// to 1.
pub trait ScoringModel: Sync {
    fn vocab_size(&self) -> usize;
    fn bos_id(&self) -> TokenId;
    fn eos_id(&self) -> TokenId;
    fn next_distribution(&self, source: &[TokenId], prefix: &[TokenId]) -> Vec<f64>;
}

/// A scoring model with a string vocabulary.
pub trait TokenModel: ScoringModel {
    fn vocab(&self) -> &Vocab;
}

/// Sum of log-probabilities of `tokens[1..]`, each conditioned on its prefix.
pub fn sequence_logprob<M: ScoringModel + ?Sized>(model: &M, source: &[TokenId], tokens: &[TokenId]) -> f64 {
    (1..tokens.len()).map(|i| model.next_distribution(source, &tokens[..i])[tokens[i] as usize].ln()).sum()
}
