//! Dataset construction: keyword sampling, gazetteer entity tagging, and the
//! JSONL record formats shared by the command-line tools.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use log::warn;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{CodecError, ConstraintSet, ExamplePair, Lexicon, PlaceholderMode, PlaceholderScheme};
use crate::tokenize::{is_punctuation, join, tokenize};

pub const BUNDLED_STOPWORDS: &str = include_str!("../resources/stopwords.txt");
pub const BUNDLED_GAZETTEER: &str = include_str!("../resources/gazetteer.txt");

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("need {needed} eligible keywords, found {available}")]
    NotEnoughEligible { needed: usize, available: usize },
    #[error("invalid sampling config: {0}")]
    InvalidConfig(String),
}

impl CorpusError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io { path: path.display().to_string(), source }
    }
}

/// A raw `(x, y)` pair, optionally with user-supplied constraints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub source: Option<Vec<String>>,
    pub target: Vec<String>,
    pub constraints: Option<ConstraintSet>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawRecordWire {
    source: Option<String>,
    target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    constraints: Option<Vec<String>>,
}

impl TryFrom<RawRecordWire> for RawRecord {
    type Error = String;

    fn try_from(wire: RawRecordWire) -> Result<Self, String> {
        let target = tokenize(&wire.target);
        if target.is_empty() {
            return Err("empty target".into());
        }
        let constraints = wire.constraints.map(|c| ConstraintSet::parse(&c)).transpose().map_err(|e| e.to_string())?;
        Ok(RawRecord { source: wire.source.map(|s| tokenize(&s)), target, constraints })
    }
}

impl From<&RawRecord> for RawRecordWire {
    fn from(r: &RawRecord) -> Self {
        RawRecordWire {
            source: r.source.as_ref().map(|s| join(s)),
            target: join(&r.target),
            constraints: r.constraints.as_ref().map(ConstraintSet::to_strings),
        }
    }
}

/// Parses one JSON value per non-blank line. Errors carry 1-based line numbers.
pub fn parse_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CorpusError::Parse { line: i + 1, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| CorpusError::Parse { line: i + 1, message: e.to_string() })?;
        out.push(value);
    }
    Ok(out)
}

pub fn read_jsonl_values<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    parse_jsonl(BufReader::new(file))
}

pub fn write_jsonl_values<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| CorpusError::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| CorpusError::io(path, e))?;
    }
    w.flush().map_err(|e| CorpusError::io(path, e))
}

pub fn parse_raw_records<R: BufRead>(reader: R) -> Result<Vec<RawRecord>, CorpusError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let parse_err = |message: String| CorpusError::Parse { line: i + 1, message };
        let line = line.map_err(|e| parse_err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let wire: RawRecordWire = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        out.push(RawRecord::try_from(wire).map_err(parse_err)?);
    }
    Ok(out)
}

pub fn read_jsonl(path: &Path) -> Result<Vec<RawRecord>, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    parse_raw_records(BufReader::new(file))
}

pub fn write_jsonl(path: &Path, records: &[RawRecord]) -> Result<(), CorpusError> {
    let wire: Vec<RawRecordWire> = records.iter().map(RawRecordWire::from).collect();
    write_jsonl_values(path, &wire)
}

/// Stopword list, matched case-insensitively.
#[derive(Debug, Clone, Default)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    pub fn parse(text: &str) -> Self {
        Self(text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_lowercase).collect())
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_STOPWORDS)
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        std::fs::read_to_string(path).map(|t| Self::parse(&t)).map_err(|e| CorpusError::io(path, e))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(&word.to_lowercase())
    }
}

impl<S: AsRef<str>> FromIterator<S> for Stopwords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(|s| s.as_ref().to_lowercase()).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingConfig {
    pub min_k: usize,
    pub max_k: usize,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { min_k: 1, max_k: 6, seed: 0 }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.min_k == 0 || self.min_k > self.max_k {
            return Err(CorpusError::InvalidConfig(format!("need 1 <= min_k <= max_k, got {}..{}", self.min_k, self.max_k)));
        }
        Ok(())
    }
}

/// Picks `k` distinct keywords from `target`, returned in sentence order.
///
/// Eligible tokens are not stopwords, not punctuation, and occur exactly
/// once in the sentence.
pub fn sample_keywords<R: Rng + ?Sized>(
    target: &[String],
    k: usize,
    rng: &mut R,
    stopwords: &Stopwords,
) -> Result<ConstraintSet, CorpusError> {
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for t in target {
        *freq.entry(t.as_str()).or_default() += 1;
    }
    let eligible: Vec<&String> =
        target.iter().filter(|t| freq[t.as_str()] == 1 && !is_punctuation(t) && !stopwords.contains(t)).collect();
    if eligible.len() < k {
        return Err(CorpusError::NotEnoughEligible { needed: k, available: eligible.len() });
    }
    let mut picked = sample(rng, eligible.len(), k).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| Lexicon::new(vec![eligible[i].clone()]).expect("eligible tokens are plain words")).collect())
}

/// Dictionary of entity surface forms, matched longest-first.
#[derive(Debug, Clone, Default)]
pub struct Gazetteer {
    entries: Vec<Vec<String>>,
    // first token -> entry indices, longest entry first
    by_first: HashMap<String, Vec<usize>>,
}

impl Gazetteer {
    pub fn new<I: IntoIterator<Item = Vec<String>>>(entries: I) -> Self {
        let mut entries: Vec<Vec<String>> = entries.into_iter().filter(|e| !e.is_empty()).collect();
        entries.sort();
        entries.dedup();
        let mut by_first: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            by_first.entry(e[0].clone()).or_default().push(i);
        }
        for ids in by_first.values_mut() {
            ids.sort_by(|&a, &b| entries[b].len().cmp(&entries[a].len()).then(a.cmp(&b)));
        }
        Self { entries, by_first }
    }

    /// One entry per line; each line is tokenized.
    pub fn parse(text: &str) -> Self {
        Self::new(text.lines().map(tokenize))
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_GAZETTEER)
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        std::fs::read_to_string(path).map(|t| Self::parse(&t)).map_err(|e| CorpusError::io(path, e))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, tokens: &[String]) -> bool {
        self.entries.binary_search_by(|e| e.as_slice().cmp(tokens)).is_ok()
    }
}

/// Left-to-right, longest-match, non-overlapping entity tagging.
/// Repeated mentions are kept.
pub fn extract_entities(target: &[String], gazetteer: &Gazetteer) -> ConstraintSet {
    let mut found = Vec::new();
    let mut i = 0;
    while i < target.len() {
        let hit = gazetteer
            .by_first
            .get(&target[i])
            .and_then(|ids| ids.iter().map(|&id| &gazetteer.entries[id]).find(|e| target[i..].starts_with(e)));
        match hit.and_then(|e| Lexicon::new(e.clone()).ok()) {
            Some(lex) => {
                i += lex.len();
                found.push(lex);
            }
            None => i += 1,
        }
    }
    ConstraintSet::new(found)
}

/// Where constraints come from when a record does not carry its own.
#[derive(Debug, Clone)]
pub enum ConstraintSource {
    Keywords { config: SamplingConfig, stopwords: Stopwords },
    Entities(Gazetteer),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub example_count: usize,
    pub skipped: usize,
    pub mean_output_len: f64,
    /// Number of examples per constraint count.
    pub constraint_histogram: BTreeMap<usize, usize>,
    pub scheme: PlaceholderMode,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub examples: Vec<ExamplePair>,
    /// Record index of every example, parallel to `examples`.
    pub record_ids: Vec<usize>,
    pub stats: DatasetStats,
}

fn mix_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer over the combined value
    let mut z = seed ^ index.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Error)]
enum SkipReason {
    #[error(transparent)]
    Sampling(#[from] CorpusError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

fn build_one(
    index: usize,
    record: &RawRecord,
    source: &ConstraintSource,
    scheme: PlaceholderScheme,
) -> Result<ExamplePair, SkipReason> {
    let constraints = match (&record.constraints, source) {
        (Some(given), _) => given.clone(),
        (None, ConstraintSource::Keywords { config, stopwords }) => {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, index as u64));
            let k = rng.gen_range(config.min_k..=config.max_k);
            sample_keywords(&record.target, k, &mut rng, stopwords)?
        }
        (None, ConstraintSource::Entities(gazetteer)) => extract_entities(&record.target, gazetteer),
    };
    let src = record.source.as_deref().unwrap_or(&[]);
    Ok(ExamplePair::build(src, &record.target, &constraints, scheme)?)
}

/// Turns raw records into example pairs. Records whose constraints cannot be
/// sampled or located are skipped and counted. Output order follows input
/// order; runs on the current rayon pool.
pub fn build_dataset(
    records: &[RawRecord],
    source: &ConstraintSource,
    scheme: PlaceholderScheme,
) -> Result<Dataset, CorpusError> {
    if let ConstraintSource::Keywords { config, .. } = source {
        config.validate()?;
    }
    let built: Vec<Result<ExamplePair, SkipReason>> =
        records.par_iter().enumerate().map(|(i, r)| build_one(i, r, source, scheme)).collect();

    let mut examples = Vec::with_capacity(built.len());
    let mut record_ids = Vec::with_capacity(built.len());
    let mut stats = DatasetStats { scheme: scheme.mode, ..DatasetStats::default() };
    let mut total_len = 0usize;
    for (i, result) in built.into_iter().enumerate() {
        match result {
            Ok(pair) => {
                total_len += pair.raw_target.len();
                *stats.constraint_histogram.entry(pair.constraints.len()).or_default() += 1;
                examples.push(pair);
                record_ids.push(i);
            }
            Err(reason) => {
                warn!("skipping record {i}: {reason}");
                stats.skipped += 1;
            }
        }
    }
    stats.example_count = examples.len();
    if !examples.is_empty() {
        stats.mean_output_len = total_len as f64 / examples.len() as f64;
    }
    Ok(Dataset { examples, record_ids, stats })
}

/// One line of a built examples file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub id: u64,
    pub scheme: PlaceholderMode,
    pub source: Option<String>,
    pub target: String,
    pub constraints: Vec<String>,
    pub input: String,
    pub output: String,
}

impl ExampleRecord {
    pub fn from_pair(id: u64, pair: &ExamplePair) -> Self {
        Self {
            id,
            scheme: pair.scheme.mode,
            source: (!pair.source_tokens.is_empty()).then(|| join(&pair.source_tokens)),
            target: join(&pair.raw_target),
            constraints: pair.constraints.to_strings(),
            input: join(&pair.input_tokens),
            output: join(&pair.output_tokens),
        }
    }

    /// Rebuilds the pair from the raw fields and checks the stored encodings
    /// against it.
    pub fn to_pair(&self) -> Result<ExamplePair, String> {
        let constraints = ConstraintSet::parse(&self.constraints).map_err(|e| e.to_string())?;
        let source = self.source.as_deref().map(tokenize).unwrap_or_default();
        let pair = ExamplePair::build(&source, &tokenize(&self.target), &constraints, PlaceholderScheme::new(self.scheme))
            .map_err(|e| e.to_string())?;
        if join(&pair.input_tokens) != self.input || join(&pair.output_tokens) != self.output {
            return Err("stored input/output do not match the record's target and constraints".into());
        }
        Ok(pair)
    }
}
