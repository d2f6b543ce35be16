use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::lm::{ScoringModel, TokenId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamConfig {
    pub beam_size: usize,
    /// Maximum sequence length, counting `<BOS>` and `<EOS>`.
    pub max_len: usize,
    /// Exponent `γ` in `score / len^γ` used for the final ranking.
    pub length_penalty: f64,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self { beam_size: 5, max_len: 64, length_penalty: 1.0 }
    }
}

impl BeamConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.beam_size == 0 {
            return Err("beam size must be at least 1".into());
        }
        if self.max_len < 2 {
            return Err("max length must be at least 2".into());
        }
        if !(self.length_penalty >= 0.0 && self.length_penalty.is_finite()) {
            return Err("length penalty must be a non-negative number".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    /// Starts with `<BOS>`.
    pub tokens: Vec<TokenId>,
    /// Sum of log-probabilities of every token after `<BOS>`.
    pub score: f64,
    /// Ended with `<EOS>`.
    pub finished: bool,
    /// Stopped at the length limit without `<EOS>`.
    pub truncated: bool,
}

impl Hypothesis {
    pub(crate) fn start(bos: TokenId) -> Self {
        Self { tokens: vec![bos], score: 0.0, finished: false, truncated: false }
    }

    /// Number of tokens after `<BOS>`.
    pub fn generated_len(&self) -> usize {
        self.tokens.len().saturating_sub(1)
    }

    pub fn normalized_score(&self, length_penalty: f64) -> f64 {
        let len = self.generated_len();
        if len == 0 || length_penalty == 0.0 {
            self.score
        } else {
            self.score / (len as f64).powf(length_penalty)
        }
    }
}

/// Final ranking: hypotheses that emitted `<EOS>` before truncated ones, then
/// by normalized score, then by token ids.
pub(crate) fn final_order(a: &Hypothesis, b: &Hypothesis, length_penalty: f64) -> Ordering {
    b.finished
        .cmp(&a.finished)
        .then_with(|| b.normalized_score(length_penalty).total_cmp(&a.normalized_score(length_penalty)))
        .then_with(|| a.tokens.cmp(&b.tokens))
}

/// Keeps the `k` smallest items under `cmp`, sorted.
pub(crate) fn select_top<T, F: FnMut(&T, &T) -> Ordering>(items: &mut Vec<T>, k: usize, mut cmp: F) {
    if items.len() > k {
        items.select_nth_unstable_by(k - 1, &mut cmp);
        items.truncate(k);
    }
    items.sort_by(cmp);
}

struct Candidate {
    parent: usize,
    token: TokenId,
    score: f64,
}

/// Standard beam search from `<BOS>`.
///
/// Each step extends every live hypothesis by every token and keeps the
/// `beam_size` best extensions by cumulative score; extensions ending in
/// `<EOS>` leave the beam. Ties go to the lexicographically smaller token-id
/// sequence. Hypotheses still live at `max_len` are returned as truncated.
pub fn beam_search<M: ScoringModel + ?Sized>(model: &M, source: &[TokenId], config: &BeamConfig) -> Vec<Hypothesis> {
    let eos = model.eos_id();
    let mut live = vec![Hypothesis::start(model.bos_id())];
    let mut done: Vec<Hypothesis> = Vec::new();

    while !live.is_empty() {
        if live[0].tokens.len() >= config.max_len {
            done.extend(live.drain(..).map(|h| Hypothesis { truncated: true, ..h }));
            break;
        }
        let mut candidates = Vec::with_capacity(live.len() * model.vocab_size());
        for (parent, hyp) in live.iter().enumerate() {
            let dist = model.next_distribution(source, &hyp.tokens);
            candidates.extend(dist.iter().enumerate().map(|(w, p)| Candidate {
                parent,
                token: w as TokenId,
                score: hyp.score + p.ln(),
            }));
        }
        select_top(&mut candidates, config.beam_size, |a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| live[a.parent].tokens.cmp(&live[b.parent].tokens))
                .then(a.token.cmp(&b.token))
        });

        let mut next = Vec::with_capacity(candidates.len());
        for c in candidates {
            let mut tokens = Vec::with_capacity(live[c.parent].tokens.len() + 1);
            tokens.extend_from_slice(&live[c.parent].tokens);
            tokens.push(c.token);
            let finished = c.token == eos;
            let hyp = Hypothesis { tokens, score: c.score, finished, truncated: false };
            if finished {
                done.push(hyp);
            } else {
                next.push(hyp);
            }
        }
        live = next;
    }

    select_top(&mut done, config.beam_size, |a, b| final_order(a, b, config.length_penalty));
    done
}
