//! Conversion between plain text with constraints and the template form the
//! model is trained on.
//!
//! A target sentence `y` with constraint lexicons `Z` becomes a template in
//! which every constraint span is replaced by a placeholder token, framed by
//! `<BOS>`/`<EOS>`. The model input lists each placeholder next to the lexicon
//! it stands for, followed by the `|` separator and the source document:
//!
//! ```text
//! input:  TL;DR: <P1> Japan <P2> Akihito | ...
//! output: <BOS> <P1> 's Emperor <P2> offered sympathy <EOS>
//! ```
//!
//! Lexicalization substitutes the lexicons back, so any template that carries
//! every slot exactly once yields text containing every constraint.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenize::{join, tokenize};

pub const TLDR: &str = "TL;DR:";
pub const SEPARATOR: &str = "|";
pub const BOS: &str = "<BOS>";
pub const EOS: &str = "<EOS>";
pub const SINGLE_MASK: &str = "<M>";
pub const UNK: &str = "<UNK>";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("invalid lexicon: {0}")]
    InvalidLexicon(String),
    #[error("constraint {0} has no valid non-overlapping match in the target")]
    ConstraintNotFound(usize),
    #[error("template slots do not match the constraints: {0}")]
    SlotMismatch(String),
}

/// Surface of the `k`-th slot placeholder (1-based).
pub fn slot_surface(k: usize) -> String {
    format!("<P{k}>")
}

/// Index of a `<Pk>` token, if the token has that shape.
pub fn parse_slot(token: &str) -> Option<usize> {
    let digits = token.strip_prefix("<P")?.strip_suffix('>')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

/// True for every surface the formats reserve: markers, sentinels and slots.
pub fn is_reserved(token: &str) -> bool {
    matches!(token, TLDR | SEPARATOR | BOS | EOS | SINGLE_MASK | UNK) || parse_slot(token).is_some()
}

/// One constraint: a non-empty run of ordinary tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Lexicon(Vec<String>);

impl Lexicon {
    pub fn new(tokens: Vec<String>) -> Result<Self, CodecError> {
        if tokens.is_empty() {
            return Err(CodecError::InvalidLexicon("empty lexicon".into()));
        }
        if let Some(t) = tokens.iter().find(|t| is_reserved(t)) {
            return Err(CodecError::InvalidLexicon(format!("reserved token {t:?}")));
        }
        Ok(Self(tokens))
    }

    /// Tokenizes `text` and wraps the result.
    pub fn parse(text: &str) -> Result<Self, CodecError> {
        Self::new(tokenize(text))
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Lexicon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&join(&self.0))
    }
}

/// Ordered constraint lexicons. Order matters: the `k`-th lexicon is bound to
/// slot `<Pk>`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ConstraintSet(Vec<Lexicon>);

impl ConstraintSet {
    pub fn new(items: Vec<Lexicon>) -> Self {
        Self(items)
    }

    pub fn parse<S: AsRef<str>>(texts: &[S]) -> Result<Self, CodecError> {
        texts.iter().map(|t| Lexicon::parse(t.as_ref())).collect::<Result<Vec<_>, _>>().map(Self)
    }

    pub fn items(&self) -> &[Lexicon] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Lexicon> {
        self.0.iter()
    }

    /// Total number of tokens over all lexicons.
    pub fn token_count(&self) -> usize {
        self.0.iter().map(Lexicon::len).sum()
    }

    /// Canonical string form of each lexicon.
    pub fn to_strings(&self) -> Vec<String> {
        self.0.iter().map(Lexicon::to_string).collect()
    }
}

impl FromIterator<Lexicon> for ConstraintSet {
    fn from_iter<I: IntoIterator<Item = Lexicon>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlaceholderMode {
    /// `<P1>`, `<P2>`, ... numbered by order of appearance.
    #[default]
    Unique,
    /// Every slot uses the same `<M>` surface.
    SingleMask,
}

impl PlaceholderMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PlaceholderMode::Unique => "unique",
            PlaceholderMode::SingleMask => "single-mask",
        }
    }
}

impl fmt::Display for PlaceholderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Reserved surfaces used for slots and sequence framing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct PlaceholderScheme {
    pub mode: PlaceholderMode,
}

impl PlaceholderScheme {
    pub const UNIQUE: Self = Self { mode: PlaceholderMode::Unique };
    pub const SINGLE_MASK: Self = Self { mode: PlaceholderMode::SingleMask };

    pub fn new(mode: PlaceholderMode) -> Self {
        Self { mode }
    }

    pub fn is_unique(&self) -> bool {
        self.mode == PlaceholderMode::Unique
    }

    /// Surface of slot `k` (1-based).
    pub fn surface(&self, k: usize) -> String {
        match self.mode {
            PlaceholderMode::Unique => slot_surface(k),
            PlaceholderMode::SingleMask => SINGLE_MASK.to_string(),
        }
    }

    pub fn bos(&self) -> &'static str {
        BOS
    }

    pub fn eos(&self) -> &'static str {
        EOS
    }

    /// Slot index carried by `token` under this scheme. Single-mask slots
    /// report index 0 since they carry no number.
    fn slot_of(&self, token: &str) -> Option<usize> {
        match self.mode {
            PlaceholderMode::Unique => parse_slot(token),
            PlaceholderMode::SingleMask => (token == SINGLE_MASK).then_some(0),
        }
    }
}

/// Template text: tokens with placeholder slots, framed by `<BOS>`/`<EOS>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub tokens: Vec<String>,
    pub slot_count: usize,
    pub scheme: PlaceholderScheme,
}

impl Template {
    /// Wraps decoder output without checking it.
    pub fn from_tokens(tokens: Vec<String>, slot_count: usize, scheme: PlaceholderScheme) -> Self {
        Self { tokens, slot_count, scheme }
    }

    /// Well-formed templates are exactly the fixed points of [`repair_template`].
    pub fn is_well_formed(&self) -> bool {
        !repair_template(&self.tokens, self.slot_count, self.scheme).repaired
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&join(&self.tokens))
    }
}

/// A constraint occurrence inside a target: tokens `start..end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub constraint: usize,
    pub start: usize,
    pub end: usize,
}

/// Assigns one non-overlapping span to every constraint.
///
/// Among all valid assignments the one whose tuple of starts (in constraint
/// order) is lexicographically smallest wins. Spans are returned in
/// constraint order.
pub fn find_constraint_spans(target: &[String], constraints: &ConstraintSet) -> Result<Vec<Span>, CodecError> {
    let n = constraints.len();
    let occurrences: Vec<Vec<usize>> = constraints
        .iter()
        .map(|lex| {
            let len = lex.len();
            if len > target.len() {
                return Vec::new();
            }
            (0..=target.len() - len).filter(|&s| target[s..s + len] == *lex.tokens()).collect()
        })
        .collect();

    // A later copy of an identical lexicon never needs to start before the
    // earlier one: swapping the two gives a smaller start tuple.
    let twin_of: Vec<Option<usize>> =
        (0..n).map(|i| (0..i).rev().find(|&j| constraints.items()[j] == constraints.items()[i])).collect();

    let searchable = occurrences.iter().position(Vec::is_empty).unwrap_or(n);
    let mut search = SpanSearch {
        constraints,
        occurrences: &occurrences,
        twin_of: &twin_of,
        occupied: vec![false; target.len()],
        starts: vec![0; n],
        deepest: 0,
        dead: HashSet::new(),
        limit: searchable,
    };
    if !search.place(0) {
        return Err(CodecError::ConstraintNotFound(search.deepest));
    }
    if searchable < n {
        return Err(CodecError::ConstraintNotFound(searchable));
    }
    Ok(search
        .starts
        .iter()
        .enumerate()
        .map(|(i, &start)| Span { constraint: i, start, end: start + constraints.items()[i].len() })
        .collect())
}

struct SpanSearch<'a> {
    constraints: &'a ConstraintSet,
    occurrences: &'a [Vec<usize>],
    twin_of: &'a [Option<usize>],
    occupied: Vec<bool>,
    starts: Vec<usize>,
    deepest: usize,
    dead: HashSet<(usize, usize, Vec<bool>)>,
    limit: usize,
}

impl SpanSearch<'_> {
    fn place(&mut self, depth: usize) -> bool {
        self.deepest = self.deepest.max(depth);
        if depth == self.limit {
            return true;
        }
        let floor = self.twin_of[depth].map_or(0, |j| self.starts[j] + 1);
        let key = (depth, floor, self.occupied.clone());
        if self.dead.contains(&key) {
            return false;
        }
        let len = self.constraints.items()[depth].len();
        for &start in &self.occurrences[depth] {
            if start < floor || self.occupied[start..start + len].iter().any(|&o| o) {
                continue;
            }
            self.occupied[start..start + len].fill(true);
            self.starts[depth] = start;
            if self.place(depth + 1) {
                return true;
            }
            self.occupied[start..start + len].fill(false);
        }
        self.dead.insert(key);
        false
    }
}

/// Masks every constraint span of `target` and frames the result.
///
/// Slots are numbered by order of appearance in `target`; for the template to
/// lexicalize back to `target`, `constraints` must already be listed in that
/// order (see [`ExamplePair::build`], which reorders them).
pub fn encode_template(
    target: &[String],
    constraints: &ConstraintSet,
    scheme: PlaceholderScheme,
) -> Result<Template, CodecError> {
    let mut spans = if constraints.is_empty() { Vec::new() } else { find_constraint_spans(target, constraints)? };
    spans.sort_by_key(|s| s.start);

    let mut tokens = Vec::with_capacity(target.len() + 2);
    tokens.push(BOS.to_string());
    let mut pos = 0;
    for (rank, span) in spans.iter().enumerate() {
        tokens.extend_from_slice(&target[pos..span.start]);
        tokens.push(scheme.surface(rank + 1));
        pos = span.end;
    }
    tokens.extend_from_slice(&target[pos..]);
    tokens.push(EOS.to_string());
    Ok(Template { tokens, slot_count: constraints.len(), scheme })
}

/// Model input: `TL;DR:`, each slot surface followed by its lexicon, `|`,
/// then the source tokens.
pub fn encode_input(source: &[String], constraints: &ConstraintSet, scheme: PlaceholderScheme) -> Vec<String> {
    let mut out = Vec::with_capacity(2 + constraints.len() + constraints.token_count() + source.len());
    out.push(TLDR.to_string());
    for (k, lex) in constraints.iter().enumerate() {
        out.push(scheme.surface(k + 1));
        out.extend_from_slice(lex.tokens());
    }
    out.push(SEPARATOR.to_string());
    out.extend_from_slice(source);
    out
}

/// Input for models that generate text directly: the lexicons are prefixed
/// as plain keywords, without slot surfaces.
pub fn encode_direct_input(source: &[String], constraints: &ConstraintSet) -> Vec<String> {
    let mut out = Vec::with_capacity(2 + constraints.token_count() + source.len());
    out.push(TLDR.to_string());
    for lex in constraints.iter() {
        out.extend_from_slice(lex.tokens());
    }
    out.push(SEPARATOR.to_string());
    out.extend_from_slice(source);
    out
}

/// Replaces each slot with its lexicon and strips the framing sentinels.
pub fn lexicalize(template: &Template, constraints: &ConstraintSet) -> Result<Vec<String>, CodecError> {
    let n = constraints.len();
    if template.slot_count != n {
        return Err(CodecError::SlotMismatch(format!(
            "template has {} slots but {} constraints were given",
            template.slot_count, n
        )));
    }
    let scheme = template.scheme;
    let mut seen = vec![false; n];
    let mut next_mask = 0;
    let mut out = Vec::with_capacity(template.tokens.len() + constraints.token_count());
    for token in &template.tokens {
        if token == BOS || token == EOS {
            continue;
        }
        let Some(slot) = scheme.slot_of(token) else {
            if token == SINGLE_MASK || parse_slot(token).is_some() {
                return Err(CodecError::SlotMismatch(format!(
                    "placeholder {token} does not belong to the {} scheme",
                    scheme.mode
                )));
            }
            out.push(token.clone());
            continue;
        };
        let index = if scheme.is_unique() {
            if slot == 0 || slot > n {
                return Err(CodecError::SlotMismatch(format!("unknown placeholder {token}")));
            }
            if std::mem::replace(&mut seen[slot - 1], true) {
                return Err(CodecError::SlotMismatch(format!("duplicate placeholder {token}")));
            }
            slot - 1
        } else {
            if next_mask == n {
                return Err(CodecError::SlotMismatch(format!("more than {n} {SINGLE_MASK} placeholders")));
            }
            next_mask += 1;
            next_mask - 1
        };
        out.extend_from_slice(constraints.items()[index].tokens());
    }
    if scheme.is_unique() {
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(CodecError::SlotMismatch(format!("missing placeholder {}", slot_surface(missing + 1))));
        }
    } else if next_mask != n {
        return Err(CodecError::SlotMismatch(format!("expected {n} {SINGLE_MASK} placeholders, found {next_mask}")));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Repaired {
    pub template: Template,
    pub repaired: bool,
}

/// Forces raw decoder output into a well-formed template.
///
/// Sentinels and input-format markers are removed from the body, foreign or
/// repeated slots are dropped, surviving slots are renumbered `1..m` by
/// position, the remaining numbers are appended in ascending order just
/// before `<EOS>`,
/// and the result is framed by `<BOS>`/`<EOS>`.
pub fn repair_template(tokens: &[String], slot_count: usize, scheme: PlaceholderScheme) -> Repaired {
    let mut body: Vec<String> = Vec::with_capacity(tokens.len() + slot_count);
    let mut kept: Vec<usize> = Vec::new(); // body positions of surviving slots
    let mut present = vec![false; slot_count];
    let mut masks = 0;

    for token in tokens {
        if matches!(token.as_str(), BOS | EOS | TLDR | SEPARATOR) {
            continue;
        }
        let foreign = match scheme.mode {
            PlaceholderMode::Unique => token == SINGLE_MASK,
            PlaceholderMode::SingleMask => parse_slot(token).is_some(),
        };
        if foreign {
            continue;
        }
        match scheme.slot_of(token) {
            None => body.push(token.clone()),
            Some(_) if !scheme.is_unique() => {
                if masks < slot_count {
                    masks += 1;
                    body.push(SINGLE_MASK.to_string());
                }
            }
            Some(k) => {
                if (1..=slot_count).contains(&k) && !present[k - 1] {
                    present[k - 1] = true;
                    kept.push(body.len());
                    body.push(slot_surface(k));
                }
            }
        }
    }

    if scheme.is_unique() {
        for (k, &pos) in kept.iter().enumerate() {
            body[pos] = slot_surface(k + 1);
        }
        body.extend((kept.len() + 1..=slot_count).map(slot_surface));
    } else {
        body.extend((masks..slot_count).map(|_| SINGLE_MASK.to_string()));
    }

    let mut out = Vec::with_capacity(body.len() + 2);
    out.push(BOS.to_string());
    out.extend(body);
    out.push(EOS.to_string());
    let repaired = out != tokens;
    Repaired { template: Template { tokens: out, slot_count, scheme }, repaired }
}

/// A training pair `(x̃, ỹ)` with everything needed to undo the encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExamplePair {
    pub input_tokens: Vec<String>,
    pub output_tokens: Vec<String>,
    /// Constraints in order of appearance in `raw_target`.
    pub constraints: ConstraintSet,
    pub source_tokens: Vec<String>,
    pub raw_target: Vec<String>,
    pub scheme: PlaceholderScheme,
}

impl ExamplePair {
    /// Reorders `constraints` by appearance in `target`, then encodes the
    /// input and the template.
    pub fn build(
        source: &[String],
        target: &[String],
        constraints: &ConstraintSet,
        scheme: PlaceholderScheme,
    ) -> Result<Self, CodecError> {
        let ordered = if constraints.is_empty() {
            ConstraintSet::default()
        } else {
            let mut spans = find_constraint_spans(target, constraints)?;
            spans.sort_by_key(|s| s.start);
            spans.iter().map(|s| constraints.items()[s.constraint].clone()).collect()
        };
        let template = encode_template(target, &ordered, scheme)?;
        Ok(Self {
            input_tokens: encode_input(source, &ordered, scheme),
            output_tokens: template.tokens,
            constraints: ordered,
            source_tokens: source.to_vec(),
            raw_target: target.to_vec(),
            scheme,
        })
    }

    pub fn template(&self) -> Template {
        Template::from_tokens(self.output_tokens.clone(), self.constraints.len(), self.scheme)
    }

    /// Input used by direct (non-template) generation baselines.
    pub fn direct_input(&self) -> Vec<String> {
        encode_direct_input(&self.source_tokens, &self.constraints)
    }

    /// The raw target framed by `<BOS>`/`<EOS>`.
    pub fn direct_output(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(self.raw_target.len() + 2);
        out.push(BOS.to_string());
        out.extend_from_slice(&self.raw_target);
        out.push(EOS.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn cs(items: &[&str]) -> ConstraintSet {
        ConstraintSet::parse(items).unwrap()
    }

    fn spans(v: &[(usize, usize, usize)]) -> Vec<Span> {
        v.iter().map(|&(constraint, start, end)| Span { constraint, start, end }).collect()
    }

    #[test]
    fn spans_follow_appearance() {
        let target = toks("Japan 's Emperor Akihito offered sympathy");
        let got = find_constraint_spans(&target, &cs(&["Japan", "Akihito"])).unwrap();
        assert_eq!(got, spans(&[(0, 0, 1), (1, 3, 4)]));
    }

    #[test]
    fn leftmost_match_wins() {
        let got = find_constraint_spans(&toks("a a b"), &cs(&["a"])).unwrap();
        assert_eq!(got, spans(&[(0, 0, 1)]));
    }

    #[test]
    fn overlapping_cover_is_rejected() {
        let err = find_constraint_spans(&toks("x y x y"), &cs(&["x y", "y x"])).unwrap_err();
        assert_eq!(err, CodecError::ConstraintNotFound(1));
    }

    #[test]
    fn missing_constraint_reports_index() {
        let err = find_constraint_spans(&toks("a b c"), &cs(&["b", "z", "c"])).unwrap_err();
        assert_eq!(err, CodecError::ConstraintNotFound(1));
    }

    #[test]
    fn backtracking_finds_later_cover() {
        // Leftmost "a b" at 0 blocks "b c"; the only cover puts "a b" at 3.
        let got = find_constraint_spans(&toks("a b c a b"), &cs(&["a b", "b c"])).unwrap();
        assert_eq!(got, spans(&[(0, 3, 5), (1, 1, 3)]));
    }

    #[test]
    fn duplicate_constraints_take_distinct_spans() {
        let got = find_constraint_spans(&toks("Paris and Paris"), &cs(&["Paris", "Paris"])).unwrap();
        assert_eq!(got, spans(&[(0, 0, 1), (1, 2, 3)]));
        let err = find_constraint_spans(&toks("Paris only"), &cs(&["Paris", "Paris"])).unwrap_err();
        assert_eq!(err, CodecError::ConstraintNotFound(1));
    }

    #[test]
    fn encode_template_examples() {
        let t = encode_template(
            &toks("Japan 's Emperor Akihito offered sympathy"),
            &cs(&["Japan", "Akihito"]),
            PlaceholderScheme::UNIQUE,
        )
        .unwrap();
        assert_eq!(t.to_string(), "<BOS> <P1> 's Emperor <P2> offered sympathy <EOS>");
        assert_eq!(t.slot_count, 2);

        let t = encode_template(&toks("hello world"), &ConstraintSet::default(), PlaceholderScheme::UNIQUE).unwrap();
        assert_eq!(t.to_string(), "<BOS> hello world <EOS>");
        assert_eq!(t.slot_count, 0);

        let t = encode_template(
            &toks("the leading provider of currency software"),
            &cs(&["leading", "currency", "software"]),
            PlaceholderScheme::SINGLE_MASK,
        )
        .unwrap();
        assert_eq!(t.to_string(), "<BOS> the <M> provider of <M> <M> <EOS>");
    }

    #[test]
    fn encode_input_examples() {
        let unique = PlaceholderScheme::UNIQUE;
        assert_eq!(join(&encode_input(&[], &cs(&["Japan", "Akihito"]), unique)), "TL;DR: <P1> Japan <P2> Akihito |");
        assert_eq!(join(&encode_input(&toks("d1 d2 d3"), &cs(&["Japan"]), unique)), "TL;DR: <P1> Japan | d1 d2 d3");
        assert_eq!(join(&encode_input(&[], &ConstraintSet::default(), unique)), "TL;DR: |");
        assert_eq!(
            join(&encode_input(&[], &cs(&["Amir Khan", "UAE"]), PlaceholderScheme::SINGLE_MASK)),
            "TL;DR: <M> Amir Khan <M> UAE |"
        );
        assert_eq!(join(&encode_direct_input(&toks("d1"), &cs(&["Amir Khan", "UAE"]))), "TL;DR: Amir Khan UAE | d1");
    }

    #[test]
    fn lexicalize_examples() {
        let unique = PlaceholderScheme::UNIQUE;
        let t = Template::from_tokens(toks("<BOS> <P1> 's Emperor <P2> offered sympathy <EOS>"), 2, unique);
        assert_eq!(join(&lexicalize(&t, &cs(&["Japan", "Akihito"])).unwrap()), "Japan 's Emperor Akihito offered sympathy");

        let t = Template::from_tokens(toks("<BOS> hi <EOS>"), 0, unique);
        assert_eq!(lexicalize(&t, &ConstraintSet::default()).unwrap(), toks("hi"));

        let t = Template::from_tokens(toks("<BOS> <P2> x <EOS>"), 2, unique);
        assert!(matches!(lexicalize(&t, &cs(&["a", "b"])), Err(CodecError::SlotMismatch(_))));
    }

    #[test]
    fn lexicalize_rejects_bad_slots() {
        let unique = PlaceholderScheme::UNIQUE;
        let two = cs(&["a", "b"]);
        for bad in ["<BOS> <P1> <P1> <P2> <EOS>", "<BOS> <P1> <P3> <EOS>", "<BOS> <P1> <M> <P2> <EOS>"] {
            let t = Template::from_tokens(toks(bad), 2, unique);
            assert!(matches!(lexicalize(&t, &two), Err(CodecError::SlotMismatch(_))), "{bad}");
        }
        let t = Template::from_tokens(toks("<BOS> <M> <EOS>"), 2, PlaceholderScheme::SINGLE_MASK);
        assert!(matches!(lexicalize(&t, &two), Err(CodecError::SlotMismatch(_))));
        let t = Template::from_tokens(toks("<BOS> <P1> <EOS>"), 1, unique);
        assert!(matches!(lexicalize(&t, &two), Err(CodecError::SlotMismatch(_))));
    }

    #[test]
    fn single_mask_lexicalizes_in_order() {
        let t = Template::from_tokens(toks("<BOS> the <M> provider of <M> <M> <EOS>"), 3, PlaceholderScheme::SINGLE_MASK);
        let out = lexicalize(&t, &cs(&["leading", "currency", "software"])).unwrap();
        assert_eq!(join(&out), "the leading provider of currency software");
    }

    #[test]
    fn repair_examples() {
        let unique = PlaceholderScheme::UNIQUE;
        let r = repair_template(&toks("<BOS> <P1> a <P1> <EOS>"), 2, unique);
        assert_eq!(r.template.to_string(), "<BOS> <P1> a <P2> <EOS>");
        assert!(r.repaired);

        let good = toks("<BOS> <P1> 's Emperor <P2> offered sympathy <EOS>");
        let r = repair_template(&good, 2, unique);
        assert_eq!(r.template.tokens, good);
        assert!(!r.repaired);

        let r = repair_template(&toks("a b"), 1, unique);
        assert_eq!(r.template.to_string(), "<BOS> a b <P1> <EOS>");
        assert!(r.repaired);
    }

    #[test]
    fn repair_reorders_and_drops_foreign_slots() {
        let unique = PlaceholderScheme::UNIQUE;
        let r = repair_template(&toks("<BOS> <P3> x <P1> | <M> <P9> <EOS> tail"), 3, unique);
        assert_eq!(r.template.to_string(), "<BOS> <P1> x <P2> tail <P3> <EOS>");
        assert!(r.template.is_well_formed());

        let single = PlaceholderScheme::SINGLE_MASK;
        let r = repair_template(&toks("<BOS> <M> <P1> <M> <M> <EOS>"), 2, single);
        assert_eq!(r.template.to_string(), "<BOS> <M> <M> <EOS>");
        let r = repair_template(&toks("<BOS> x <EOS>"), 2, single);
        assert_eq!(r.template.to_string(), "<BOS> x <M> <M> <EOS>");
    }

    #[test]
    fn example_pair_reorders_constraints() {
        let pair = ExamplePair::build(
            &toks("doc"),
            &toks("Japan 's Emperor Akihito offered sympathy"),
            &cs(&["Akihito", "Japan"]),
            PlaceholderScheme::UNIQUE,
        )
        .unwrap();
        assert_eq!(join(&pair.input_tokens), "TL;DR: <P1> Japan <P2> Akihito | doc");
        assert_eq!(join(&pair.output_tokens), "<BOS> <P1> 's Emperor <P2> offered sympathy <EOS>");
        assert_eq!(lexicalize(&pair.template(), &pair.constraints).unwrap(), pair.raw_target);
        assert_eq!(join(&pair.direct_input()), "TL;DR: Japan Akihito | doc");
    }

    #[test]
    fn lexicon_rejects_reserved_and_empty() {
        assert!(Lexicon::parse("").is_err());
        assert!(Lexicon::new(vec!["<P1>".into()]).is_err());
        assert!(Lexicon::new(vec!["TL;DR:".into()]).is_err());
        assert!(Lexicon::new(vec!["<EOS>".into()]).is_err());
        assert_eq!(parse_slot("<P12>"), Some(12));
        assert_eq!(parse_slot("<P>"), None);
        assert_eq!(parse_slot("<Px>"), None);
    }
}
