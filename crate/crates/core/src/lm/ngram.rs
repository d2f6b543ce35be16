use std::collections::HashMap;

use super::vocab::{TokenId, Vocab};
use super::{LmError, ScoringModel, TokenModel};
use crate::codec::ExamplePair;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Highest n-gram order, at least 2.
    pub order: usize,
    /// Mixture weight of the source-copy distribution, in `[0, 1)`.
    pub copy_weight: f64,
    /// Additive smoothing constant.
    pub alpha: f64,
    /// Per-order weights `λ_1..λ_order`. When unset, weights double with
    /// each order and are scaled to sum to `1 - copy_weight`.
    pub ngram_weights: Option<Vec<f64>>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { order: 3, copy_weight: 0.3, alpha: 0.1, ngram_weights: None }
    }
}

impl ModelConfig {
    pub fn resolved_weights(&self) -> Result<Vec<f64>, LmError> {
        let bad = |msg: String| Err(LmError::InvalidConfig(msg));
        if self.order < 2 {
            return bad(format!("order must be at least 2, got {}", self.order));
        }
        if !(0.0..1.0).contains(&self.copy_weight) {
            return bad(format!("copy weight must lie in [0, 1), got {}", self.copy_weight));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return bad(format!("alpha must be a non-negative number, got {}", self.alpha));
        }
        let weights = match &self.ngram_weights {
            Some(w) => w.clone(),
            None => {
                let raw: Vec<f64> = (0..self.order).map(|n| 2f64.powi(n as i32)).collect();
                let total: f64 = raw.iter().sum();
                raw.iter().map(|r| r / total * (1.0 - self.copy_weight)).collect()
            }
        };
        if weights.len() != self.order {
            return bad(format!("expected {} n-gram weights, got {}", self.order, weights.len()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return bad("n-gram weights must be non-negative".into());
        }
        let sum: f64 = weights.iter().sum::<f64>() + self.copy_weight;
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("weights sum to {sum}, expected 1"));
        }
        Ok(weights)
    }
}

/// Successor counts for one context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct ContextCounts {
    pub(crate) total: u64,
    /// Sorted by token id.
    pub(crate) next: Vec<(TokenId, u64)>,
}

/// Interpolated additive-smoothing n-gram model over the output side, mixed
/// with a copy distribution over the source tokens other than `TL;DR:` and `|`:
///
/// `p(w | src, h) = Σ_n λ_n (c(h_n, w) + α) / (c(h_n) + α|V|) + λ_copy · #(w ∈ src) / |src|`
///
/// where `h_n` is the last `n-1` tokens of the prefix (fewer at the start of
/// a sequence). With nothing to copy the copy weight is spread over the
/// n-gram terms in proportion to their weights. Contexts never seen in
/// training contribute a uniform term.
#[derive(Debug, Clone, PartialEq)]
pub struct CondNgramModel {
    pub(crate) order: usize,
    pub(crate) weights: Vec<f64>,
    pub(crate) copy_weight: f64,
    pub(crate) alpha: f64,
    pub(crate) vocab: Vocab,
    /// `tables[m]` maps contexts of length `m` to their successors.
    pub(crate) tables: Vec<HashMap<Vec<TokenId>, ContextCounts>>,
}

impl CondNgramModel {
    /// Counts every n-gram (n = 1..order) of the `outputs`. The vocabulary
    /// covers outputs, inputs and the reserved surfaces.
    pub fn fit_sequences(outputs: &[Vec<String>], inputs: &[Vec<String>], config: &ModelConfig) -> Result<Self, LmError> {
        let weights = config.resolved_weights()?;
        if outputs.is_empty() {
            return Err(LmError::EmptyCorpus);
        }
        let vocab = Vocab::build(outputs.iter().chain(inputs).flatten());
        let mut raw: Vec<HashMap<Vec<TokenId>, HashMap<TokenId, u64>>> = vec![HashMap::new(); config.order];
        for seq in outputs {
            let ids = vocab.encode(seq);
            for i in 0..ids.len() {
                for (m, table) in raw.iter_mut().enumerate().take(i + 1) {
                    *table.entry(ids[i - m..i].to_vec()).or_default().entry(ids[i]).or_default() += 1;
                }
            }
        }
        let tables = raw
            .into_iter()
            .map(|table| {
                table
                    .into_iter()
                    .map(|(ctx, next)| {
                        let mut next: Vec<(TokenId, u64)> = next.into_iter().collect();
                        next.sort_unstable();
                        let total = next.iter().map(|&(_, c)| c).sum();
                        (ctx, ContextCounts { total, next })
                    })
                    .collect()
            })
            .collect();
        Ok(Self { order: config.order, weights, copy_weight: config.copy_weight, alpha: config.alpha, vocab, tables })
    }

    /// Template model: `x̃ -> ỹ`.
    pub fn fit(pairs: &[ExamplePair], config: &ModelConfig) -> Result<Self, LmError> {
        let outputs: Vec<Vec<String>> = pairs.iter().map(|p| p.output_tokens.clone()).collect();
        let inputs: Vec<Vec<String>> = pairs.iter().map(|p| p.input_tokens.clone()).collect();
        Self::fit_sequences(&outputs, &inputs, config)
    }

    /// Direct model: keyword-prefixed input to the raw target text.
    pub fn fit_direct(pairs: &[ExamplePair], config: &ModelConfig) -> Result<Self, LmError> {
        let outputs: Vec<Vec<String>> = pairs.iter().map(ExamplePair::direct_output).collect();
        let inputs: Vec<Vec<String>> = pairs.iter().map(ExamplePair::direct_input).collect();
        Self::fit_sequences(&outputs, &inputs, config)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn copy_weight(&self) -> f64 {
        self.copy_weight
    }

    pub fn ngram_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn config(&self) -> ModelConfig {
        ModelConfig {
            order: self.order,
            copy_weight: self.copy_weight,
            alpha: self.alpha,
            ngram_weights: Some(self.weights.clone()),
        }
    }

    /// Training count of an n-gram (length 1..=order); 0 when unseen.
    pub fn ngram_count(&self, ngram: &[TokenId]) -> u64 {
        let Some((last, ctx)) = ngram.split_last() else { return 0 };
        self.tables
            .get(ctx.len())
            .and_then(|t| t.get(ctx))
            .and_then(|c| c.next.binary_search_by_key(last, |&(id, _)| id).ok().map(|i| c.next[i].1))
            .unwrap_or(0)
    }

    /// Convenience wrapper over string tokens.
    pub fn distribution_for(&self, source: &[String], prefix: &[String]) -> Vec<f64> {
        self.next_distribution(&self.vocab.encode(source), &self.vocab.encode(prefix))
    }
}

impl ScoringModel for CondNgramModel {
    fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn bos_id(&self) -> TokenId {
        Vocab::BOS_ID
    }

    fn eos_id(&self) -> TokenId {
        Vocab::EOS_ID
    }

    fn next_distribution(&self, source: &[TokenId], prefix: &[TokenId]) -> Vec<f64> {
        let v = self.vocab.len();
        let mut probs = vec![0.0; v];
        // The input's framing markers never occur in outputs and are not copied.
        let copyable = || source.iter().filter(|&&t| t != Vocab::TLDR_ID && t != Vocab::SEPARATOR_ID);
        let copy_len = copyable().count();
        let copying = copy_len > 0 && self.copy_weight > 0.0;
        let scale = if copying || self.copy_weight == 0.0 { 1.0 } else { 1.0 / (1.0 - self.copy_weight) };

        let mut uniform = 0.0;
        for (n, &weight) in self.weights.iter().enumerate() {
            let w = weight * scale;
            if w == 0.0 {
                continue;
            }
            let ctx_len = n.min(prefix.len());
            let ctx = &prefix[prefix.len() - ctx_len..];
            match self.tables[ctx_len].get(ctx) {
                Some(counts) if counts.total > 0 => {
                    let denom = counts.total as f64 + self.alpha * v as f64;
                    uniform += w * self.alpha / denom;
                    for &(id, c) in &counts.next {
                        probs[id as usize] += w * c as f64 / denom;
                    }
                }
                _ => uniform += w / v as f64,
            }
        }
        if uniform != 0.0 {
            probs.iter_mut().for_each(|p| *p += uniform);
        }
        if copying {
            let share = self.copy_weight / copy_len as f64;
            for &t in copyable() {
                probs[t as usize] += share;
            }
        }
        probs
    }
}

impl TokenModel for CondNgramModel {
    fn vocab(&self) -> &Vocab {
        &self.vocab
    }
}
