use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{beam_search, grid_beam_search, BeamConfig, Hypothesis};
use crate::codec::{
    encode_direct_input, encode_input, lexicalize, repair_template, ConstraintSet, PlaceholderScheme, Template, BOS, EOS,
};
use crate::lm::{ModelSet, TokenModel};

/// A generation system under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum System {
    /// Template generation followed by lexicalization.
    AutoTemplate,
    /// Beam search over plain text with the constraints given as input
    /// keywords.
    Beam,
    /// Grid beam search over plain text.
    Gbs,
}

impl System {
    pub const ALL: [System; 3] = [System::Beam, System::Gbs, System::AutoTemplate];

    pub fn as_str(self) -> &'static str {
        match self {
            System::AutoTemplate => "autotemplate",
            System::Beam => "beam",
            System::Gbs => "gbs",
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for System {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "autotemplate" => Ok(System::AutoTemplate),
            "beam" => Ok(System::Beam),
            "gbs" => Ok(System::Gbs),
            other => Err(format!("unknown system {other:?} (expected autotemplate, beam or gbs)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Rank of the hypothesis the output came from.
    pub rank_used: usize,
    /// The template had to be repaired before lexicalization.
    pub repaired: bool,
    /// Grid beam search only: the bank the result came from.
    pub bank_reached: Option<usize>,
    /// Model log-probability of the chosen hypothesis.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub tokens: Vec<String>,
    pub diagnostics: Diagnostics,
}

fn strip_frame(tokens: Vec<String>) -> Vec<String> {
    tokens.into_iter().filter(|t| t != BOS && t != EOS).collect()
}

/// Generates a template for `constraints` and lexicalizes it.
///
/// The best hypothesis that is already a well-formed template wins; when
/// none is, the top hypothesis is repaired. The output contains every
/// constraint.
pub fn autotemplate_generate<M: TokenModel + ?Sized>(
    model: &M,
    source: &[String],
    constraints: &ConstraintSet,
    scheme: PlaceholderScheme,
    config: &BeamConfig,
) -> Generation {
    let vocab = model.vocab();
    let input = vocab.encode(&encode_input(source, constraints, scheme));
    let hypotheses = beam_search(model, &input, config);
    let n = constraints.len();

    // Truncated hypotheses lack <EOS>, so they never count as well-formed.
    let well_formed = hypotheses
        .iter()
        .map(|h| Template::from_tokens(vocab.decode(&h.tokens), n, scheme))
        .enumerate()
        .find(|(_, t)| t.is_well_formed());
    let (rank_used, template, repaired) = match well_formed {
        Some((rank, template)) => (rank, template, false),
        None => {
            let top = hypotheses.first().map(|h| vocab.decode(&h.tokens)).unwrap_or_default();
            (0, repair_template(&top, n, scheme).template, true)
        }
    };
    let tokens = lexicalize(&template, constraints).expect("repaired templates always lexicalize");
    let score = hypotheses.get(rank_used).map_or(f64::NEG_INFINITY, |h| h.score);
    Generation { tokens, diagnostics: Diagnostics { rank_used, repaired, bank_reached: None, score } }
}

/// Plain beam search with the constraints as input keywords.
pub fn direct_beam_generate<M: TokenModel + ?Sized>(
    model: &M,
    source: &[String],
    constraints: &ConstraintSet,
    config: &BeamConfig,
) -> Generation {
    let vocab = model.vocab();
    let input = vocab.encode(&encode_direct_input(source, constraints));
    let hypotheses = beam_search(model, &input, config);
    from_top(model, hypotheses.first(), None)
}

/// Grid beam search with the constraints enforced by the decoder rather than
/// given as input.
pub fn gbs_generate<M: TokenModel + ?Sized>(
    model: &M,
    source: &[String],
    constraints: &ConstraintSet,
    config: &BeamConfig,
) -> Generation {
    let vocab = model.vocab();
    let input = vocab.encode(&encode_direct_input(source, &ConstraintSet::default()));
    let ids: Vec<_> = constraints.iter().map(|c| vocab.encode(c.tokens())).collect();
    let result = grid_beam_search(model, &input, &ids, config);
    from_top(model, result.hypotheses.first(), Some(result.bank_reached))
}

fn from_top<M: TokenModel + ?Sized>(model: &M, top: Option<&Hypothesis>, bank_reached: Option<usize>) -> Generation {
    let (tokens, score) = match top {
        Some(h) => (strip_frame(model.vocab().decode(&h.tokens)), h.score),
        None => (Vec::new(), f64::NEG_INFINITY),
    };
    Generation { tokens, diagnostics: Diagnostics { rank_used: 0, repaired: false, bank_reached, score } }
}

/// Runs `system` with the matching head of `models`.
pub fn generate(
    models: &ModelSet,
    system: System,
    source: &[String],
    constraints: &ConstraintSet,
    config: &BeamConfig,
) -> Generation {
    match system {
        System::AutoTemplate => autotemplate_generate(&models.template, source, constraints, models.scheme, config),
        System::Beam => direct_beam_generate(&models.direct, source, constraints, config),
        System::Gbs => gbs_generate(&models.direct, source, constraints, config),
    }
}
