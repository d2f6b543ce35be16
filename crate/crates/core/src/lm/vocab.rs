use std::collections::HashMap;

use crate::codec::{slot_surface, BOS, EOS, SEPARATOR, SINGLE_MASK, TLDR, UNK};

pub type TokenId = u32;

/// Slot surfaces `<P1>..<Pn>` that every vocabulary carries up front.
pub const RESERVED_SLOT_COUNT: usize = 16;

/// Dense token <-> id mapping. Reserved surfaces come first in a fixed order;
/// the rest is sorted, so the mapping does not depend on corpus order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    ids: HashMap<String, TokenId>,
}

impl Vocab {
    pub const UNK_ID: TokenId = 0;
    pub const BOS_ID: TokenId = 1;
    pub const EOS_ID: TokenId = 2;
    pub const TLDR_ID: TokenId = 4;
    pub const SEPARATOR_ID: TokenId = 5;

    pub fn reserved() -> Vec<String> {
        let mut out: Vec<String> = [UNK, BOS, EOS, SINGLE_MASK, TLDR, SEPARATOR].iter().map(|s| s.to_string()).collect();
        out.extend((1..=RESERVED_SLOT_COUNT).map(slot_surface));
        out
    }

    pub fn build<'a, I: IntoIterator<Item = &'a String>>(observed: I) -> Self {
        let mut tokens = Self::reserved();
        let mut rest: Vec<&String> = observed.into_iter().collect();
        rest.sort_unstable();
        rest.dedup();
        let reserved_len = tokens.len();
        for t in rest {
            if !tokens[..reserved_len].contains(t) {
                tokens.push(t.clone());
            }
        }
        Self::from_ordered(tokens)
    }

    /// Takes the id order as given; used when loading a model file.
    pub(crate) fn from_ordered(tokens: Vec<String>) -> Self {
        let ids = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as TokenId)).collect();
        Self { tokens, ids }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<TokenId> {
        self.ids.get(token).copied()
    }

    /// Unknown tokens map to `<UNK>`.
    pub fn id(&self, token: &str) -> TokenId {
        self.get(token).unwrap_or(Self::UNK_ID)
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<TokenId> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    pub fn decode(&self, ids: &[TokenId]) -> Vec<String> {
        ids.iter().map(|&i| self.token(i).to_string()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_first_and_unknown_maps_to_unk() {
        let words: Vec<String> = ["zebra", "apple", "<BOS>", "apple"].iter().map(|s| s.to_string()).collect();
        let v = Vocab::build(&words);
        assert_eq!(v.token(Vocab::UNK_ID), "<UNK>");
        assert_eq!(v.token(Vocab::BOS_ID), "<BOS>");
        assert_eq!(v.token(Vocab::EOS_ID), "<EOS>");
        assert_eq!(v.token(Vocab::TLDR_ID), "TL;DR:");
        assert_eq!(v.token(Vocab::SEPARATOR_ID), "|");
        assert_eq!(v.len(), Vocab::reserved().len() + 2);
        assert!(v.id("apple") < v.id("zebra"));
        assert_eq!(v.id("missing"), Vocab::UNK_ID);
        assert!(v.get("<P16>").is_some());
        assert_eq!(v.decode(&v.encode(&["apple", "<P3>"])), ["apple", "<P3>"]);
    }
}
