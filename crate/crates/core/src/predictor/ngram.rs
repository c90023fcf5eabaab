use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::state::{DecodeState, PredictionStep};
use crate::vocab::{TokenId, Vocabulary};

use super::MaskPredictor;

/// Count-based n-gram mask predictor with add-k smoothing.
///
/// Counts are kept for every context length from 0 to `order - 1`. A query
/// backs off to the longest suffix of its context that was observed during
/// training; the empty context is always observed. Under context `c` with
/// counts `n(c, w)` and total `N(c)`, a non-mask token has probability
/// `(n(c, w) + k) / (N(c) + k * V')` where `V'` is the number of non-mask ids.
///
/// When forming the context of a generation position, masked positions are
/// skipped: the context is the nearest `order - 1` unmasked tokens to its
/// left, prompt included.
#[derive(Debug, Clone)]
pub struct NGramPredictor {
    vocab: Vocabulary,
    order: usize,
    smoothing: f64,
    counts: HashMap<Vec<TokenId>, ContextCounts>,
}

#[derive(Debug, Clone, Default)]
struct ContextCounts {
    next: HashMap<TokenId, u64>,
    total: u64,
    /// Argmax token and its count, lowest id on ties.
    best: (TokenId, u64),
}

pub fn train_ngram(
    corpus: &[Vec<TokenId>],
    order: usize,
    smoothing: f64,
    vocab: &Vocabulary,
) -> Result<NGramPredictor> {
    if order == 0 {
        return Err(Error::Training("n-gram order must be at least 1".into()));
    }
    if !(smoothing >= 0.0 && smoothing.is_finite()) {
        return Err(Error::Training(format!("invalid smoothing constant {smoothing}")));
    }
    if corpus.iter().all(|s| s.is_empty()) {
        return Err(Error::Training("empty corpus".into()));
    }
    let mut counts: HashMap<Vec<TokenId>, ContextCounts> = HashMap::new();
    for seq in corpus {
        for (i, &tok) in seq.iter().enumerate() {
            vocab.check(tok)?;
            if tok == vocab.mask_id() {
                return Err(Error::Training("corpus contains the mask token".into()));
            }
            let max_ctx = (order - 1).min(i);
            for len in 0..=max_ctx {
                let entry = counts.entry(seq[i - len..i].to_vec()).or_default();
                *entry.next.entry(tok).or_insert(0) += 1;
                entry.total += 1;
            }
        }
    }
    for c in counts.values_mut() {
        let mut best = (TokenId::MAX, 0u64);
        for (&tok, &n) in &c.next {
            if n > best.1 || (n == best.1 && tok < best.0) {
                best = (tok, n);
            }
        }
        c.best = best;
    }
    Ok(NGramPredictor {
        vocab: vocab.clone(),
        order,
        smoothing,
        counts,
    })
}

impl NGramPredictor {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    /// Raw count of `next` after exactly `context`.
    pub fn count(&self, context: &[TokenId], next: TokenId) -> u64 {
        self.counts
            .get(context)
            .and_then(|c| c.next.get(&next))
            .copied()
            .unwrap_or(0)
    }

    /// Number of observations of exactly `context`.
    pub fn context_total(&self, context: &[TokenId]) -> u64 {
        self.counts.get(context).map_or(0, |c| c.total)
    }

    fn resolve(&self, context: &[TokenId]) -> &ContextCounts {
        let keep = context.len().min(self.order - 1);
        let context = &context[context.len() - keep..];
        (0..=keep)
            .find_map(|drop| self.counts.get(&context[drop..]))
            .expect("the empty context is always observed")
    }

    fn non_mask_count(&self) -> f64 {
        (self.vocab.size() - 1) as f64
    }

    /// Full next-token distribution after `context` (mask id gets zero).
    pub fn distribution(&self, context: &[TokenId]) -> Vec<f64> {
        let c = self.resolve(context);
        let k = self.smoothing;
        let denom = c.total as f64 + k * self.non_mask_count();
        let mask = self.vocab.mask_id();
        (0..self.vocab.size())
            .map(|id| {
                if id == mask {
                    0.0
                } else {
                    (c.next.get(&id).copied().unwrap_or(0) as f64 + k) / denom
                }
            })
            .collect()
    }

    /// Greedy token after `context` and its probability.
    pub fn argmax(&self, context: &[TokenId]) -> (TokenId, f64) {
        let c = self.resolve(context);
        let k = self.smoothing;
        let denom = c.total as f64 + k * self.non_mask_count();
        // observed contexts have a best count >= 1, so unseen ids never tie it
        let (tok, n) = c.best;
        (tok, ((n as f64 + k) / denom).min(1.0))
    }

    /// Masking-aware contexts for every active generation position.
    fn contexts(&self, state: &DecodeState) -> Vec<Vec<TokenId>> {
        let width = self.order - 1;
        let mut window: Vec<TokenId> = Vec::with_capacity(width);
        let prompt = state.prompt();
        window.extend_from_slice(&prompt[prompt.len().saturating_sub(width)..]);
        let mut out = Vec::with_capacity(state.active_len());
        for j in 0..state.active_len() {
            out.push(window.clone());
            if !state.is_masked(j) && width > 0 {
                if window.len() == width {
                    window.remove(0);
                }
                window.push(state.gen_token(j));
            }
        }
        out
    }

    /// Per-position distributions for the active generation region; committed
    /// positions are point masses on their token.
    pub fn distributions(&self, state: &DecodeState) -> Vec<Vec<f64>> {
        self.contexts(state)
            .iter()
            .enumerate()
            .map(|(j, ctx)| {
                if state.is_masked(j) {
                    self.distribution(ctx)
                } else {
                    let mut row = vec![0.0; self.vocab.size() as usize];
                    row[state.gen_token(j) as usize] = 1.0;
                    row
                }
            })
            .collect()
    }
}

impl MaskPredictor for NGramPredictor {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn predict(&self, state: &DecodeState) -> PredictionStep {
        let width = self.order - 1;
        let n = state.active_len();
        let mut predictions = Vec::with_capacity(n);
        let mut confidences = Vec::with_capacity(n);
        let prompt = state.prompt();
        let mut window: Vec<TokenId> = prompt[prompt.len().saturating_sub(width)..].to_vec();
        // consecutive masked positions share a context
        let mut cached: Option<(TokenId, f64)> = None;
        for j in 0..n {
            if state.is_masked(j) {
                let (tok, conf) = *cached.get_or_insert_with(|| self.argmax(&window));
                predictions.push(tok);
                confidences.push(conf);
            } else {
                let tok = state.gen_token(j);
                predictions.push(tok);
                confidences.push(1.0);
                if width > 0 {
                    if window.len() == width {
                        window.remove(0);
                    }
                    window.push(tok);
                    cached = None;
                }
            }
        }
        PredictionStep {
            predictions,
            confidences,
            step_index: state.step(),
            block_index: state.current_block(),
        }
    }
}
