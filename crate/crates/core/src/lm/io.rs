//! Binary model file.
//!
//! All integers little-endian:
//!
//! ```text
//! "ATLM" | version u32 | scheme u8 | head count u32 | head*
//! head:  kind u8 | order u32 | alpha f64 | copy weight f64 | λ f64 * order
//!        | vocab size u32 | (len u32, utf-8 bytes) * vocab size
//!        | for m in 0..order: contexts u32
//!            | (ids u32 * m | successors u32 | (id u32, count u64)*)*
//! ```
//!
//! Contexts are written in sorted order so that equal models produce equal
//! bytes.

use std::collections::HashMap;
use std::path::Path;

use super::ngram::{CondNgramModel, ContextCounts, ModelConfig};
use super::vocab::{TokenId, Vocab};
use super::LmError;
use crate::codec::{ExamplePair, PlaceholderMode, PlaceholderScheme};

pub const MODEL_MAGIC: &[u8; 4] = b"ATLM";
pub const MODEL_FORMAT_VERSION: u32 = 1;

const HEAD_TEMPLATE: u8 = 0;
const HEAD_DIRECT: u8 = 1;

/// The two models a generation run needs: one over templates and one over
/// plain text for the direct-generation baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSet {
    pub scheme: PlaceholderScheme,
    pub template: CondNgramModel,
    pub direct: CondNgramModel,
}

impl ModelSet {
    pub fn fit(pairs: &[ExamplePair], config: &ModelConfig) -> Result<Self, LmError> {
        let Some(first) = pairs.first() else {
            return Err(LmError::EmptyCorpus);
        };
        if pairs.iter().any(|p| p.scheme != first.scheme) {
            return Err(LmError::InvalidConfig("examples mix placeholder schemes".into()));
        }
        Ok(Self {
            scheme: first.scheme,
            template: CondNgramModel::fit(pairs, config)?,
            direct: CondNgramModel::fit_direct(pairs, config)?,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        put_u32(&mut out, MODEL_FORMAT_VERSION);
        out.push(match self.scheme.mode {
            PlaceholderMode::Unique => 0,
            PlaceholderMode::SingleMask => 1,
        });
        put_u32(&mut out, 2);
        write_head(&mut out, HEAD_TEMPLATE, &self.template);
        write_head(&mut out, HEAD_DIRECT, &self.direct);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, LmError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MODEL_MAGIC {
            return Err(LmError::Format("bad magic".into()));
        }
        let version = r.u32()?;
        if version != MODEL_FORMAT_VERSION {
            return Err(LmError::Format(format!("unsupported version {version}")));
        }
        let mode = match r.u8()? {
            0 => PlaceholderMode::Unique,
            1 => PlaceholderMode::SingleMask,
            other => return Err(LmError::Format(format!("unknown scheme tag {other}"))),
        };
        let heads = r.u32()?;
        if heads != 2 {
            return Err(LmError::Format(format!("expected 2 heads, found {heads}")));
        }
        let template = read_head(&mut r, HEAD_TEMPLATE)?;
        let direct = read_head(&mut r, HEAD_DIRECT)?;
        if r.pos != bytes.len() {
            return Err(LmError::Format("trailing bytes".into()));
        }
        Ok(Self { scheme: PlaceholderScheme::new(mode), template, direct })
    }

    pub fn save(&self, path: &Path) -> Result<(), LmError> {
        Ok(std::fs::write(path, self.to_bytes())?)
    }

    pub fn load(path: &Path) -> Result<Self, LmError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn write_head(out: &mut Vec<u8>, kind: u8, m: &CondNgramModel) {
    out.push(kind);
    put_u32(out, m.order as u32);
    put_f64(out, m.alpha);
    put_f64(out, m.copy_weight);
    for &w in &m.weights {
        put_f64(out, w);
    }
    put_u32(out, m.vocab.len() as u32);
    for t in m.vocab.tokens() {
        put_u32(out, t.len() as u32);
        out.extend_from_slice(t.as_bytes());
    }
    for table in &m.tables {
        let mut contexts: Vec<(&Vec<TokenId>, &ContextCounts)> = table.iter().collect();
        contexts.sort_unstable_by(|a, b| a.0.cmp(b.0));
        put_u32(out, contexts.len() as u32);
        for (ctx, counts) in contexts {
            for &id in ctx {
                put_u32(out, id);
            }
            put_u32(out, counts.next.len() as u32);
            for &(id, c) in &counts.next {
                put_u32(out, id);
                put_u64(out, c);
            }
        }
    }
}

fn read_head(r: &mut Reader<'_>, expected_kind: u8) -> Result<CondNgramModel, LmError> {
    let kind = r.u8()?;
    if kind != expected_kind {
        return Err(LmError::Format(format!("expected head kind {expected_kind}, found {kind}")));
    }
    let order = r.u32()? as usize;
    if !(2..=64).contains(&order) {
        return Err(LmError::Format(format!("implausible order {order}")));
    }
    let alpha = r.f64()?;
    let copy_weight = r.f64()?;
    let weights = (0..order).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
    let config = ModelConfig { order, copy_weight, alpha, ngram_weights: Some(weights.clone()) };
    config.resolved_weights().map_err(|e| LmError::Format(e.to_string()))?;

    let vocab_len = r.u32()? as usize;
    let mut tokens = Vec::with_capacity(vocab_len.min(1 << 20));
    for _ in 0..vocab_len {
        let len = r.u32()? as usize;
        let s = std::str::from_utf8(r.take(len)?).map_err(|_| LmError::Format("token is not utf-8".into()))?;
        tokens.push(s.to_string());
    }
    let vocab = Vocab::from_ordered(tokens);
    let reserved = Vocab::reserved();
    if vocab.len() != vocab_len || vocab_len < reserved.len() || vocab.tokens()[..reserved.len()] != reserved[..] {
        return Err(LmError::Format("vocabulary lacks reserved surfaces or has duplicates".into()));
    }
    let check_id = |id: u32| {
        if (id as usize) < vocab_len {
            Ok(id)
        } else {
            Err(LmError::Format(format!("token id {id} out of range")))
        }
    };

    let mut tables = Vec::with_capacity(order);
    for m in 0..order {
        let n_ctx = r.u32()? as usize;
        let mut table = HashMap::with_capacity(n_ctx.min(1 << 20));
        for _ in 0..n_ctx {
            let ctx = (0..m).map(|_| r.u32().and_then(check_id)).collect::<Result<Vec<_>, _>>()?;
            let n_next = r.u32()? as usize;
            let mut next = Vec::with_capacity(n_next.min(1 << 20));
            for _ in 0..n_next {
                next.push((check_id(r.u32()?)?, r.u64()?));
            }
            let total = next.iter().map(|&(_, c)| c).sum();
            table.insert(ctx, ContextCounts { total, next });
        }
        tables.push(table);
    }
    Ok(CondNgramModel { order, weights, copy_weight, alpha, vocab, tables })
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], LmError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| LmError::Format("truncated file".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, LmError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, LmError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, LmError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, LmError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::ConstraintSet;
    use crate::tokenize::tokenize;

    fn small_set() -> ModelSet {
        let pairs: Vec<ExamplePair> =
            [("Japan 's Emperor Akihito offered sympathy", vec!["Japan", "Akihito"]), ("the cat sat", vec!["cat"])]
                .iter()
                .map(|(t, c)| {
                    ExamplePair::build(&[], &tokenize(t), &ConstraintSet::parse(c).unwrap(), PlaceholderScheme::UNIQUE).unwrap()
                })
                .collect();
        ModelSet::fit(&pairs, &ModelConfig::default()).unwrap()
    }

    #[test]
    fn bytes_round_trip() {
        let set = small_set();
        let bytes = set.to_bytes();
        assert_eq!(&bytes[..4], b"ATLM");
        let back = ModelSet::from_bytes(&bytes).unwrap();
        assert_eq!(back, set);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn rejects_corrupt_files() {
        let bytes = small_set().to_bytes();
        assert!(matches!(ModelSet::from_bytes(b"NOPE"), Err(LmError::Format(_))));
        assert!(matches!(ModelSet::from_bytes(&bytes[..bytes.len() - 3]), Err(LmError::Format(_))));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(ModelSet::from_bytes(&extra), Err(LmError::Format(_))));
        let mut bad_version = bytes;
        bad_version[4] = 9;
        assert!(matches!(ModelSet::from_bytes(&bad_version), Err(LmError::Format(_))));
    }
}
