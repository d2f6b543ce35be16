//! Grid beam search: beam search whose beams are split into banks by the
//! number of constraint tokens already placed.
//!
//! From a state in bank `c` a hypothesis can generate any token freely (stays
//! in `c`), start an unmet constraint (moves to `c + 1`), or, once a
//! constraint is open, must emit its next token (moves to `c + 1`). Each bank
//! keeps its own `beam_size` best states. Nothing forces the search to end in
//! the top bank: the result comes from the highest bank that produced a
//! finished hypothesis, which is how constraints get dropped when the length
//! budget runs out.

use std::cmp::Ordering;

use super::beam::{final_order, select_top, BeamConfig, Hypothesis};
use crate::lm::{ScoringModel, TokenId};

#[derive(Debug, Clone, PartialEq)]
pub struct GbsResult {
    /// Finished hypotheses of the highest bank reached, best first.
    pub hypotheses: Vec<Hypothesis>,
    pub bank_reached: usize,
    pub total_constraint_tokens: usize,
    /// Every constraint token was placed in a hypothesis that ended with
    /// `<EOS>`; always true without constraints.
    pub satisfied: bool,
}

#[derive(Debug, Clone)]
struct GridState {
    hyp: Hypothesis,
    met: Vec<bool>,
    /// (constraint, index of its next token)
    open: Option<(usize, usize)>,
    bank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Move {
    Free,
    Start(usize),
    Continue,
}

struct Candidate {
    parent: usize,
    token: TokenId,
    score: f64,
    step: Move,
}

pub fn grid_beam_search<M: ScoringModel + ?Sized>(
    model: &M,
    source: &[TokenId],
    constraints: &[Vec<TokenId>],
    config: &BeamConfig,
) -> GbsResult {
    let eos = model.eos_id();
    let total: usize = constraints.iter().map(Vec::len).sum();
    // Identical constraints are interchangeable; only the first unmet copy
    // may be started.
    let twin_of: Vec<Option<usize>> =
        (0..constraints.len()).map(|i| (0..i).find(|&j| constraints[j] == constraints[i])).collect();

    let mut live =
        vec![GridState { hyp: Hypothesis::start(model.bos_id()), met: vec![false; constraints.len()], open: None, bank: 0 }];
    let mut done: Vec<GridState> = Vec::new();

    while !live.is_empty() {
        if live[0].hyp.tokens.len() >= config.max_len {
            for mut s in live.drain(..) {
                s.hyp.truncated = true;
                done.push(s);
            }
            break;
        }

        let mut banks: Vec<Vec<Candidate>> = (0..=total).map(|_| Vec::new()).collect();
        for (parent, state) in live.iter().enumerate() {
            let dist = model.next_distribution(source, &state.hyp.tokens);
            let score = |t: TokenId| state.hyp.score + dist[t as usize].ln();
            if let Some((c, pos)) = state.open {
                let token = constraints[c][pos];
                banks[state.bank + 1].push(Candidate { parent, token, score: score(token), step: Move::Continue });
                continue;
            }
            banks[state.bank].extend((0..dist.len()).map(|w| {
                let token = w as TokenId;
                Candidate { parent, token, score: score(token), step: Move::Free }
            }));
            for (c, cons) in constraints.iter().enumerate() {
                let blocked = state.met[c] || twin_of[c].is_some_and(|j| !state.met[j]);
                if blocked || cons.is_empty() {
                    continue;
                }
                let token = cons[0];
                banks[state.bank + 1].push(Candidate { parent, token, score: score(token), step: Move::Start(c) });
            }
        }

        let order = |a: &Candidate, b: &Candidate| -> Ordering {
            b.score
                .total_cmp(&a.score)
                .then_with(|| live[a.parent].hyp.tokens.cmp(&live[b.parent].hyp.tokens))
                .then(a.token.cmp(&b.token))
                .then(a.parent.cmp(&b.parent))
                .then(a.step.cmp(&b.step))
        };

        let mut next = Vec::new();
        for mut cands in banks {
            for state in select_distinct(&mut cands, config.beam_size, &order, &live, constraints, eos) {
                if state.hyp.finished {
                    done.push(state);
                } else {
                    next.push(state);
                }
            }
        }
        live = next;
    }

    let bank_reached = done.iter().map(|s| s.bank).max().unwrap_or(0);
    let mut hypotheses: Vec<Hypothesis> = done.into_iter().filter(|s| s.bank == bank_reached).map(|s| s.hyp).collect();
    select_top(&mut hypotheses, config.beam_size, |a, b| final_order(a, b, config.length_penalty));
    // A truncated hypothesis may hold every constraint token but never closed.
    let satisfied = total == 0 || (bank_reached == total && hypotheses.first().is_some_and(|h| h.finished));
    GbsResult { hypotheses, bank_reached, total_constraint_tokens: total, satisfied }
}

fn expand(parent: &GridState, c: &Candidate, constraints: &[Vec<TokenId>], eos: TokenId) -> GridState {
    let mut met = parent.met.clone();
    let (open, bank) = match c.step {
        Move::Free => (None, parent.bank),
        Move::Start(_) | Move::Continue => {
            let (i, pos) = match c.step {
                Move::Start(i) => (i, 0),
                _ => parent.open.expect("continue requires an open constraint"),
            };
            let open = if pos + 1 == constraints[i].len() {
                met[i] = true;
                None
            } else {
                Some((i, pos + 1))
            };
            (open, parent.bank + 1)
        }
    };
    let mut tokens = Vec::with_capacity(parent.hyp.tokens.len() + 1);
    tokens.extend_from_slice(&parent.hyp.tokens);
    tokens.push(c.token);
    let finished = c.step == Move::Free && c.token == eos;
    GridState { hyp: Hypothesis { tokens, score: c.score, finished, truncated: false }, met, open, bank }
}

/// Top `k` candidates of one bank, skipping later derivations of a state
/// (same tokens and coverage) already taken.
fn select_distinct<F: Fn(&Candidate, &Candidate) -> Ordering>(
    cands: &mut [Candidate],
    k: usize,
    order: &F,
    live: &[GridState],
    constraints: &[Vec<TokenId>],
    eos: TokenId,
) -> Vec<GridState> {
    let mut window = k.saturating_mul(4).max(k);
    loop {
        let exhaustive = window >= cands.len();
        let mut head: Vec<&Candidate> = if exhaustive {
            cands.iter().collect()
        } else {
            cands.select_nth_unstable_by(window - 1, order);
            cands[..window].iter().collect()
        };
        head.sort_by(|a, b| order(a, b));
        let mut out: Vec<GridState> = Vec::with_capacity(k);
        for c in head {
            if out.len() == k {
                break;
            }
            let state = expand(&live[c.parent], c, constraints, eos);
            let dup = out
                .iter()
                .rev()
                .take_while(|s| s.hyp.tokens == state.hyp.tokens)
                .any(|s| s.met == state.met && s.open == state.open);
            if !dup {
                out.push(state);
            }
        }
        if out.len() == k || exhaustive {
            return out;
        }
        window = window.saturating_mul(4);
    }
}
