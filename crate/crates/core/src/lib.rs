//! Lexically constrained text generation by template generation and
//! lexicalization.
//!
//! Constraint spans in a target are replaced by placeholders, a conditional
//! model learns to generate such templates, and the placeholders in a
//! generated template are replaced by the constraints again. Grid beam search
//! and keyword-conditioned beam search are provided as baselines, together
//! with BLEU, NIST, ROUGE and success-rate metrics.

pub mod cli;
pub mod codec;
pub mod corpus;
pub mod decode;
pub mod lm;
pub mod metrics;
pub mod tokenize;

pub use codec::{ConstraintSet, Lexicon, PlaceholderMode, PlaceholderScheme, Template};
pub use decode::{BeamConfig, Generation, System};
pub use lm::{CondNgramModel, ModelConfig, ModelSet};
