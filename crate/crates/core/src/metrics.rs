//! Corpus BLEU and NIST, macro-averaged ROUGE F1, and constraint success rate.
//!
//! All functions take aligned hypothesis/reference lists with one reference
//! per hypothesis. Corpus-level statistics are integer sums reduced before any
//! division, so results do not depend on pair order or thread count.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{find_constraint_spans, ConstraintSet, PlaceholderMode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("cannot score an empty corpus")]
    EmptyCorpus,
    #[error("{hypotheses} hypotheses but {references} references")]
    LengthMismatch { hypotheses: usize, references: usize },
}

type Tokens = Vec<String>;

fn check(hypotheses: &[Tokens], references: &[Tokens]) -> Result<(), MetricError> {
    if hypotheses.len() != references.len() {
        return Err(MetricError::LengthMismatch { hypotheses: hypotheses.len(), references: references.len() });
    }
    if hypotheses.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    Ok(())
}

/// Counts of every `n`-gram of `tokens`.
pub fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts = HashMap::new();
    if n > 0 {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

fn clipped_overlap(hyp: &HashMap<&[String], u64>, reference: &HashMap<&[String], u64>) -> u64 {
    hyp.iter().map(|(g, &c)| c.min(reference.get(g).copied().unwrap_or(0))).sum()
}

fn gram_total(len: usize, n: usize) -> u64 {
    (len + 1).saturating_sub(n) as u64
}

/// Corpus BLEU with orders `1..=n`, uniform weights, no smoothing.
pub fn bleu_n(hypotheses: &[Tokens], references: &[Tokens], n: usize) -> Result<f64, MetricError> {
    check(hypotheses, references)?;
    // per order: (clipped matches, hypothesis n-grams)
    let zero = || vec![(0u64, 0u64); n];
    let stats = hypotheses
        .par_iter()
        .zip(references)
        .map(|(h, r)| {
            (1..=n)
                .map(|m| (clipped_overlap(&ngram_counts(h, m), &ngram_counts(r, m)), gram_total(h.len(), m)))
                .collect::<Vec<_>>()
        })
        .reduce(zero, |a, b| a.iter().zip(&b).map(|(x, y)| (x.0 + y.0, x.1 + y.1)).collect());

    if stats.iter().any(|&(matches, total)| matches == 0 || total == 0) {
        return Ok(0.0);
    }
    let log_precision: f64 = stats.iter().map(|&(m, t)| (m as f64 / t as f64).ln()).sum::<f64>() / n as f64;
    let c: usize = hypotheses.iter().map(Vec::len).sum();
    let r: usize = references.iter().map(Vec::len).sum();
    let brevity = (1.0 - r as f64 / c as f64).min(0.0);
    Ok((log_precision + brevity).exp())
}

/// NIST length factor: 1 at or above the reference length, 0.5 at two thirds
/// of it.
pub fn nist_brevity_factor(system_len: usize, reference_len: usize) -> f64 {
    if reference_len == 0 {
        return 1.0;
    }
    let beta = 0.5f64.ln() / (2.0f64 / 3.0).ln().powi(2);
    let ratio = (system_len as f64 / reference_len as f64).min(1.0);
    (beta * ratio.ln().powi(2)).exp()
}

/// Corpus NIST with orders `1..=n`.
///
/// Information weights come from the reference corpus:
/// `Info(w1..wm) = log2(count(w1..w(m-1)) / count(w1..wm))`, where the empty
/// prefix counts every reference token.
pub fn nist_n(hypotheses: &[Tokens], references: &[Tokens], n: usize) -> Result<f64, MetricError> {
    check(hypotheses, references)?;
    let ref_len: u64 = references.iter().map(|r| r.len() as u64).sum();
    let sys_len: u64 = hypotheses.iter().map(|h| h.len() as u64).sum();

    let mut ref_counts: Vec<HashMap<&[String], u64>> = vec![HashMap::new(); n + 1];
    for r in references {
        for (m, table) in ref_counts.iter_mut().enumerate().skip(1) {
            for (g, c) in ngram_counts(r, m) {
                *table.entry(g).or_insert(0) += c;
            }
        }
    }
    let info = |gram: &[String]| -> f64 {
        let m = gram.len();
        let numerator = if m == 1 { ref_len } else { ref_counts[m - 1][&gram[..m - 1]] };
        (numerator as f64 / ref_counts[m][gram] as f64).log2()
    };

    let mut score = 0.0;
    for m in 1..=n {
        let hyp_total: u64 = hypotheses.iter().map(|h| gram_total(h.len(), m)).sum();
        if hyp_total == 0 {
            continue;
        }
        let mut matched: HashMap<&[String], u64> = HashMap::new();
        for (h, r) in hypotheses.iter().zip(references) {
            let rc = ngram_counts(r, m);
            for (g, c) in ngram_counts(h, m) {
                let clip = c.min(rc.get(g).copied().unwrap_or(0));
                if clip > 0 {
                    *matched.entry(g).or_insert(0) += clip;
                }
            }
        }
        let mut grams: Vec<(&[String], u64)> = matched.into_iter().collect();
        grams.sort_unstable();
        let gained: f64 = grams.iter().map(|&(g, c)| c as f64 * info(g)).sum();
        score += gained / hyp_total as f64;
    }
    Ok(score * nist_brevity_factor(sys_len as usize, ref_len as usize))
}

fn f1(overlap: u64, hyp_total: u64, ref_total: u64) -> f64 {
    if overlap == 0 || hyp_total == 0 || ref_total == 0 {
        return 0.0;
    }
    let p = overlap as f64 / hyp_total as f64;
    let r = overlap as f64 / ref_total as f64;
    2.0 * p * r / (p + r)
}

fn rouge_n_pair(h: &[String], r: &[String], n: usize) -> f64 {
    let (ht, rt) = (gram_total(h.len(), n), gram_total(r.len(), n));
    if ht == 0 && rt == 0 {
        // nothing to compare at this order
        return if h == r { 1.0 } else { 0.0 };
    }
    f1(clipped_overlap(&ngram_counts(h, n), &ngram_counts(r, n)), ht, rt)
}

/// Length of the longest common subsequence.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

fn rouge_l_pair(h: &[String], r: &[String]) -> f64 {
    if h.is_empty() && r.is_empty() {
        return 1.0;
    }
    f1(lcs_len(h, r) as u64, h.len() as u64, r.len() as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeScores {
    pub rouge1_f: f64,
    pub rouge2_f: f64,
    #[serde(rename = "rougeL_f")]
    pub rouge_l_f: f64,
}

/// Per-pair ROUGE-1/2/L F1, macro-averaged.
///
/// A pair where neither side has any n-gram of the order scores 1 if the two
/// sides are identical and 0 otherwise.
pub fn rouge_scores(hypotheses: &[Tokens], references: &[Tokens]) -> Result<RougeScores, MetricError> {
    check(hypotheses, references)?;
    let per_pair: Vec<[f64; 3]> = hypotheses
        .par_iter()
        .zip(references)
        .map(|(h, r)| [rouge_n_pair(h, r, 1), rouge_n_pair(h, r, 2), rouge_l_pair(h, r)])
        .collect();
    let count = per_pair.len() as f64;
    let mean = |i: usize| per_pair.iter().map(|p| p[i]).sum::<f64>() / count;
    Ok(RougeScores { rouge1_f: mean(0), rouge2_f: mean(1), rouge_l_f: mean(2) })
}

/// Whether every lexicon of `constraints` occurs in `output`, with repeated
/// lexicons needing disjoint occurrences.
pub fn satisfies(output: &[String], constraints: &ConstraintSet) -> bool {
    constraints.is_empty() || find_constraint_spans(output, constraints).is_ok()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessBucket {
    pub total: usize,
    pub successes: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessReport {
    /// Percentage of outputs containing all of their constraints.
    pub rate: f64,
    /// Keyed by constraint count.
    pub curve: BTreeMap<usize, SuccessBucket>,
}

fn percent(successes: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * successes as f64 / total as f64
    }
}

pub fn success_rate(outputs: &[Tokens], constraints: &[ConstraintSet]) -> Result<SuccessReport, MetricError> {
    if outputs.len() != constraints.len() {
        return Err(MetricError::LengthMismatch { hypotheses: outputs.len(), references: constraints.len() });
    }
    let hits: Vec<bool> = outputs.par_iter().zip(constraints).map(|(o, z)| satisfies(o, z)).collect();
    let mut curve: BTreeMap<usize, SuccessBucket> = BTreeMap::new();
    for (hit, z) in hits.iter().zip(constraints) {
        let bucket = curve.entry(z.len()).or_insert(SuccessBucket { total: 0, successes: 0, rate: 0.0 });
        bucket.total += 1;
        bucket.successes += usize::from(*hit);
    }
    for bucket in curve.values_mut() {
        bucket.rate = percent(bucket.successes, bucket.total);
    }
    let successes = hits.iter().filter(|&&h| h).count();
    Ok(SuccessReport { rate: percent(successes, outputs.len()), curve })
}

/// Scores of one system on one test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub system: String,
    pub scheme: PlaceholderMode,
    pub count: usize,
    pub bleu2: f64,
    pub bleu4: f64,
    pub nist2: f64,
    pub nist4: f64,
    pub rouge1_f: f64,
    pub rouge2_f: f64,
    #[serde(rename = "rougeL_f")]
    pub rouge_l_f: f64,
    pub success_rate: f64,
    /// Outputs whose template needed repair.
    pub repaired: usize,
    pub sr_curve: BTreeMap<usize, SuccessBucket>,
}

pub struct EvalInput<'a> {
    pub system: &'a str,
    pub scheme: PlaceholderMode,
    pub hypotheses: &'a [Tokens],
    pub references: &'a [Tokens],
    pub constraints: &'a [ConstraintSet],
    pub repaired: usize,
}

pub fn evaluate(input: &EvalInput<'_>) -> Result<EvalReport, MetricError> {
    let (h, r) = (input.hypotheses, input.references);
    let rouge = rouge_scores(h, r)?;
    let success = success_rate(h, input.constraints)?;
    Ok(EvalReport {
        system: input.system.to_string(),
        scheme: input.scheme,
        count: h.len(),
        bleu2: bleu_n(h, r, 2)?,
        bleu4: bleu_n(h, r, 4)?,
        nist2: nist_n(h, r, 2)?,
        nist4: nist_n(h, r, 4)?,
        rouge1_f: rouge.rouge1_f,
        rouge2_f: rouge.rouge2_f,
        rouge_l_f: rouge.rouge_l_f,
        success_rate: success.rate,
        repaired: input.repaired,
        sr_curve: success.curve,
    })
}

/// Plain-text table: BLEU and ROUGE as percentages, NIST raw, SR in percent.
pub fn render_table(reports: &[EvalReport]) -> String {
    let width = reports.iter().map(|r| r.system.len()).max().unwrap_or(0).max("system".len());
    let mut out = format!("{:<width$}", "system");
    for col in ["B2", "B4", "N2", "N4", "R1", "R2", "RL", "SR"] {
        let _ = write!(out, " {col:>7}");
    }
    out.push('\n');
    for r in reports {
        let _ = write!(out, "{:<width$}", r.system);
        let cells = [
            100.0 * r.bleu2,
            100.0 * r.bleu4,
            r.nist2,
            r.nist4,
            100.0 * r.rouge1_f,
            100.0 * r.rouge2_f,
            100.0 * r.rouge_l_f,
            r.success_rate,
        ];
        for c in cells {
            let _ = write!(out, " {c:>7.2}");
        }
        out.push('\n');
    }
    out
}
