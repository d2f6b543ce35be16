//! Brute-force reference implementations shared by the integration tests.
//! Each one recomputes its quantity directly from the definition, without
//! going through the library's data structures.

#![allow(dead_code)]

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::path::PathBuf;

use autotemplate::corpus::{build_dataset, read_jsonl, ConstraintSource, Dataset, Gazetteer, SamplingConfig, Stopwords};
use autotemplate::lm::{ScoringModel, TokenId, TokenModel, Vocab};
use autotemplate::PlaceholderScheme;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------- resources

pub fn resource(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("resources").join(name)
}

pub fn keyword_dataset(split: &str, scheme: PlaceholderScheme) -> Dataset {
    let records = read_jsonl(&resource(&format!("toy_keywords_{split}.jsonl"))).unwrap();
    let source = ConstraintSource::Keywords { config: SamplingConfig::default(), stopwords: Stopwords::bundled() };
    build_dataset(&records, &source, scheme).unwrap()
}

pub fn entity_dataset(split: &str, scheme: PlaceholderScheme) -> Dataset {
    let records = read_jsonl(&resource(&format!("toy_entities_{split}.jsonl"))).unwrap();
    build_dataset(&records, &ConstraintSource::Entities(Gazetteer::bundled()), scheme).unwrap()
}

pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

// ------------------------------------------------------------ toy decoders

/// A model whose next-token distribution is a pseudo-random function of the
/// whole prefix. Id 0 is `<BOS>`, id 1 is `<EOS>`.
pub struct RandomModel {
    pub seed: u64,
    pub vocab: usize,
}

impl ScoringModel for RandomModel {
    fn vocab_size(&self) -> usize {
        self.vocab
    }
    fn bos_id(&self) -> TokenId {
        0
    }
    fn eos_id(&self) -> TokenId {
        1
    }
    fn next_distribution(&self, _source: &[TokenId], prefix: &[TokenId]) -> Vec<f64> {
        let mut h = DefaultHasher::new();
        (self.seed, prefix).hash(&mut h);
        let mut rng = ChaCha8Rng::seed_from_u64(h.finish());
        let raw: Vec<f64> = (0..self.vocab).map(|_| rng.gen_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|r| r / total).collect()
    }
}

/// A sequence produced by exhaustive enumeration.
#[derive(Debug, Clone)]
pub struct Scored {
    pub tokens: Vec<TokenId>,
    pub score: f64,
    pub finished: bool,
}

/// Every sequence a decoder can return: `<BOS>` followed by tokens, either
/// ending in the first `<EOS>` within `max_len`, or reaching `max_len`
/// without one.
pub fn enumerate_sequences<M: ScoringModel>(model: &M, max_len: usize) -> Vec<Scored> {
    let mut out = Vec::new();
    let mut stack = vec![(vec![model.bos_id()], 0.0f64)];
    while let Some((tokens, score)) = stack.pop() {
        if tokens.len() == max_len {
            out.push(Scored { tokens, score, finished: false });
            continue;
        }
        let dist = model.next_distribution(&[], &tokens);
        for (w, p) in dist.iter().enumerate() {
            let mut next = tokens.clone();
            next.push(w as TokenId);
            let s = score + p.ln();
            if w as TokenId == model.eos_id() {
                out.push(Scored { tokens: next, score: s, finished: true });
            } else {
                stack.push((next, s));
            }
        }
    }
    out
}

/// The ranking rule: finished first, then `score / len^gamma` over tokens
/// after `<BOS>`, then smaller token ids.
pub fn best_of(seqs: &[Scored], gamma: f64) -> Option<&Scored> {
    let norm = |s: &Scored| {
        let len = (s.tokens.len() - 1) as f64;
        if len == 0.0 || gamma == 0.0 {
            s.score
        } else {
            s.score / len.powf(gamma)
        }
    };
    seqs.iter()
        .min_by(|a, b| b.finished.cmp(&a.finished).then(norm(b).partial_cmp(&norm(a)).unwrap()).then(a.tokens.cmp(&b.tokens)))
}

/// Whether `tokens` holds every constraint as its own disjoint span.
pub fn covers(tokens: &[TokenId], constraints: &[Vec<TokenId>]) -> bool {
    fn go(tokens: &[TokenId], constraints: &[Vec<TokenId>], used: &mut Vec<bool>) -> bool {
        let Some((first, rest)) = constraints.split_first() else { return true };
        if first.len() > tokens.len() {
            return false;
        }
        for s in 0..=tokens.len() - first.len() {
            let span = s..s + first.len();
            if tokens[span.clone()] == first[..] && !used[span.clone()].iter().any(|&u| u) {
                used[span.clone()].iter_mut().for_each(|u| *u = true);
                if go(tokens, rest, used) {
                    return true;
                }
                used[span].iter_mut().for_each(|u| *u = false);
            }
        }
        false
    }
    go(tokens, constraints, &mut vec![false; tokens.len()])
}

// --------------------------------------------------------- n-gram model

/// Distribution of the interpolated additive-smoothing model with a copy
/// term over the source minus its `TL;DR:` and `|` markers, recomputed by
/// scanning the training sequences for each context.
/// Returns probabilities indexed like `vocab_tokens`.
pub struct NgramOracle<'a> {
    pub outputs: &'a [Vec<String>],
    pub vocab_tokens: Vec<String>,
    pub weights: Vec<f64>,
    pub copy_weight: f64,
    pub alpha: f64,
}

impl<'a> NgramOracle<'a> {
    /// Reserved surfaces, then every other token seen in outputs or inputs,
    /// sorted.
    pub fn vocabulary(outputs: &[Vec<String>], inputs: &[Vec<String>]) -> Vec<String> {
        let mut reserved: Vec<String> = ["<UNK>", "<BOS>", "<EOS>", "<M>", "TL;DR:", "|"].iter().map(|s| s.to_string()).collect();
        reserved.extend((1..=16).map(|k| format!("<P{k}>")));
        let mut rest: Vec<String> = outputs.iter().chain(inputs).flatten().filter(|t| !reserved.contains(t)).cloned().collect();
        rest.sort();
        rest.dedup();
        reserved.extend(rest);
        reserved
    }

    pub fn distribution(&self, source: &[String], prefix: &[String]) -> Vec<f64> {
        let v = self.vocab_tokens.len();
        let source: Vec<&String> = source.iter().filter(|t| *t != "TL;DR:" && *t != "|").collect();
        let copy_on = !source.is_empty();
        let scale = if copy_on { 1.0 } else { 1.0 / (1.0 - self.copy_weight) };
        let mut probs = vec![0.0; v];
        for (n, &w) in self.weights.iter().enumerate() {
            let m = n.min(prefix.len());
            let ctx = &prefix[prefix.len() - m..];
            let mut counts = vec![0u64; v];
            let mut total = 0u64;
            for seq in self.outputs {
                for i in m..seq.len() {
                    if seq[i - m..i] == *ctx {
                        let id = self.vocab_tokens.iter().position(|t| *t == seq[i]).unwrap();
                        counts[id] += 1;
                        total += 1;
                    }
                }
            }
            for (k, p) in probs.iter_mut().enumerate() {
                let term = if total == 0 {
                    1.0 / v as f64
                } else {
                    (counts[k] as f64 + self.alpha) / (total as f64 + self.alpha * v as f64)
                };
                *p += w * scale * term;
            }
        }
        if copy_on {
            for (k, p) in probs.iter_mut().enumerate() {
                let c = source.iter().filter(|t| ***t == self.vocab_tokens[k]).count();
                *p += self.copy_weight * c as f64 / source.len() as f64;
            }
        }
        probs
    }
}

// ---------------------------------------------------------------- metrics

/// All n-grams of `t` as owned vectors, with repeats.
fn grams(t: &[String], n: usize) -> Vec<Vec<String>> {
    if t.len() < n {
        return Vec::new();
    }
    (0..=t.len() - n).map(|i| t[i..i + n].to_vec()).collect()
}

fn count_of(list: &[Vec<String>], g: &[String]) -> u64 {
    list.iter().filter(|x| x.as_slice() == g).count() as u64
}

/// Clipped overlap by walking distinct hypothesis n-grams.
fn overlap(h: &[Vec<String>], r: &[Vec<String>]) -> u64 {
    let mut seen: Vec<&Vec<String>> = Vec::new();
    let mut total = 0;
    for g in h {
        if seen.contains(&g) {
            continue;
        }
        seen.push(g);
        total += count_of(h, g).min(count_of(r, g));
    }
    total
}

pub fn bleu_oracle(h: &[Vec<String>], r: &[Vec<String>], n: usize) -> f64 {
    let mut log_sum = 0.0;
    for m in 1..=n {
        let mut matches = 0u64;
        let mut total = 0u64;
        for (x, y) in h.iter().zip(r) {
            let (gx, gy) = (grams(x, m), grams(y, m));
            matches += overlap(&gx, &gy);
            total += gx.len() as u64;
        }
        if matches == 0 {
            return 0.0;
        }
        log_sum += (matches as f64 / total as f64).ln();
    }
    let c: usize = h.iter().map(Vec::len).sum();
    let rl: usize = r.iter().map(Vec::len).sum();
    let bp = if c >= rl { 1.0 } else { (1.0 - rl as f64 / c as f64).exp() };
    bp * (log_sum / n as f64).exp()
}

pub fn nist_oracle(h: &[Vec<String>], r: &[Vec<String>], n: usize) -> f64 {
    let all_ref: Vec<Vec<Vec<String>>> = (0..=n).map(|m| r.iter().flat_map(|y| grams(y, m.max(1))).collect()).collect();
    let ref_tokens: usize = r.iter().map(Vec::len).sum();
    let info = |g: &[String]| {
        let m = g.len();
        let num = if m == 1 { ref_tokens as f64 } else { count_of(&all_ref[m - 1], &g[..m - 1]) as f64 };
        (num / count_of(&all_ref[m], g) as f64).log2()
    };
    let mut score = 0.0;
    for m in 1..=n {
        let mut gained = 0.0;
        let mut total = 0usize;
        for (x, y) in h.iter().zip(r) {
            let (gx, gy) = (grams(x, m), grams(y, m));
            total += gx.len();
            let mut seen: Vec<&Vec<String>> = Vec::new();
            for g in &gx {
                if seen.contains(&g) {
                    continue;
                }
                seen.push(g);
                let clip = count_of(&gx, g).min(count_of(&gy, g));
                if clip > 0 {
                    gained += clip as f64 * info(g);
                }
            }
        }
        if total > 0 {
            score += gained / total as f64;
        }
    }
    let sys: usize = h.iter().map(Vec::len).sum();
    let ratio = if ref_tokens == 0 { 1.0 } else { (sys as f64 / ref_tokens as f64).min(1.0) };
    let beta = 0.5f64.ln() / (2.0f64 / 3.0).ln().powi(2);
    score * (beta * ratio.ln().powi(2)).exp()
}

fn f_score(o: f64, hn: f64, rn: f64) -> f64 {
    if o == 0.0 {
        return 0.0;
    }
    let (p, r) = (o / hn, o / rn);
    2.0 * p * r / (p + r)
}

/// Longest common subsequence by trying every subsequence of the shorter
/// string.
pub fn lcs_exhaustive(a: &[String], b: &[String]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut best = 0;
    for mask in 0u32..(1 << short.len()) {
        let sub: Vec<&String> = (0..short.len()).filter(|i| mask & (1 << i) != 0).map(|i| &short[i]).collect();
        if sub.len() <= best {
            continue;
        }
        let mut it = long.iter();
        if sub.iter().all(|s| it.any(|x| x == *s)) {
            best = sub.len();
        }
    }
    best
}

/// (ROUGE-1, ROUGE-2, ROUGE-L) F1, averaged over pairs. A pair with no
/// n-grams on either side scores 1 when identical and 0 otherwise.
pub fn rouge_oracle(h: &[Vec<String>], r: &[Vec<String>], lcs: fn(&[String], &[String]) -> usize) -> [f64; 3] {
    let mut sums = [0.0; 3];
    for (x, y) in h.iter().zip(r) {
        for (i, n) in [1usize, 2].into_iter().enumerate() {
            let (gx, gy) = (grams(x, n), grams(y, n));
            sums[i] += if gx.is_empty() && gy.is_empty() {
                f64::from(u8::from(x == y))
            } else if gx.is_empty() || gy.is_empty() {
                0.0
            } else {
                f_score(overlap(&gx, &gy) as f64, gx.len() as f64, gy.len() as f64)
            };
        }
        sums[2] += if x.is_empty() && y.is_empty() {
            1.0
        } else if x.is_empty() || y.is_empty() {
            0.0
        } else {
            f_score(lcs(x, y) as f64, x.len() as f64, y.len() as f64)
        };
    }
    sums.map(|s| s / h.len() as f64)
}

/// LCS by the textbook full table, used where exhaustive search is too slow.
pub fn lcs_table(a: &[String], b: &[String]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] { t[i - 1][j - 1] + 1 } else { t[i - 1][j].max(t[i][j - 1]) };
        }
    }
    t[a.len()][b.len()]
}

/// A random corpus over a small alphabet so that n-grams repeat.
pub fn random_corpus(rng: &mut impl Rng, pairs: usize, max_len: usize, alphabet: usize) -> (Vec<Vec<String>>, Vec<Vec<String>>) {
    let sentence = |rng: &mut dyn rand::RngCore| -> Vec<String> {
        let len = rng.gen_range(0..=max_len);
        (0..len).map(|_| format!("w{}", rng.gen_range(0..alphabet))).collect()
    };
    let h = (0..pairs).map(|_| sentence(rng)).collect();
    let r = (0..pairs).map(|_| sentence(rng)).collect();
    (h, r)
}

// ----------------------------------------------------------- adversaries

/// Wraps a model and removes all probability from placeholder tokens, so
/// templates it generates never carry slots.
pub struct NoPlaceholders<M>(pub M);

impl<M: TokenModel> ScoringModel for NoPlaceholders<M> {
    fn vocab_size(&self) -> usize {
        self.0.vocab_size()
    }
    fn bos_id(&self) -> TokenId {
        self.0.bos_id()
    }
    fn eos_id(&self) -> TokenId {
        self.0.eos_id()
    }
    fn next_distribution(&self, source: &[TokenId], prefix: &[TokenId]) -> Vec<f64> {
        let vocab = self.0.vocab();
        let mut p = self.0.next_distribution(source, prefix);
        for (id, t) in vocab.tokens().iter().enumerate() {
            if t == "<M>" || (t.starts_with("<P") && t.ends_with('>')) {
                p[id] = 0.0;
            }
        }
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        p
    }
}

impl<M: TokenModel> TokenModel for NoPlaceholders<M> {
    fn vocab(&self) -> &Vocab {
        self.0.vocab()
    }
}
