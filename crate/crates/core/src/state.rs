//! Block layout and the evolving decode state.
//!
//! A [`DecodeState`] is the prompt followed by a generation region of
//! `gen_length` positions. The generation region is split into blocks of
//! `block_size` positions that are decoded left to right. All generation
//! indices are 0-based and relative to the start of the generation region.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::{TokenId, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockConfig {
    pub gen_length: usize,
    pub block_size: usize,
    pub max_steps_per_block: usize,
}

impl BlockConfig {
    /// Block layout with the default step cap of `4 * block_size`.
    pub fn new(gen_length: usize, block_size: usize) -> Result<Self> {
        Self::with_cap(gen_length, block_size, 4 * block_size)
    }

    pub fn with_cap(gen_length: usize, block_size: usize, max_steps_per_block: usize) -> Result<Self> {
        let cfg = Self {
            gen_length,
            block_size,
            max_steps_per_block,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gen_length == 0 || self.block_size == 0 {
            return Err(Error::Config("gen_length and block_size must be positive".into()));
        }
        if !self.gen_length.is_multiple_of(self.block_size) {
            return Err(Error::Config(format!(
                "block_size {} does not divide gen_length {}",
                self.block_size, self.gen_length
            )));
        }
        if self.max_steps_per_block < self.block_size {
            return Err(Error::Config(format!(
                "max_steps_per_block {} is below block_size {}",
                self.max_steps_per_block, self.block_size
            )));
        }
        Ok(())
    }

    pub fn num_blocks(&self) -> usize {
        self.gen_length / self.block_size
    }
}

impl Default for BlockConfig {
    fn default() -> Self {
        Self {
            gen_length: 128,
            block_size: 32,
            max_steps_per_block: 128,
        }
    }
}

/// Prompt plus generation region with explicit per-position mask flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeState {
    tokens: Vec<TokenId>,
    prompt_len: usize,
    masked: Vec<bool>,
    current_block: usize,
    active_len: usize,
    block_cfg: BlockConfig,
    mask_id: TokenId,
    eot_id: TokenId,
    vocab_size: u32,
    step: usize,
    block_step: usize,
}

impl DecodeState {
    pub fn new(prompt: &[TokenId], cfg: BlockConfig, vocab: &Vocabulary) -> Result<Self> {
        cfg.validate()?;
        if prompt.is_empty() {
            return Err(Error::Precondition("prompt must be non-empty".into()));
        }
        for (i, &t) in prompt.iter().enumerate() {
            vocab.check(t)?;
            if t == vocab.mask_id() {
                return Err(Error::MaskInPrompt(i));
            }
        }
        let mut tokens = Vec::with_capacity(prompt.len() + cfg.gen_length);
        tokens.extend_from_slice(prompt);
        tokens.resize(prompt.len() + cfg.gen_length, vocab.mask_id());
        Ok(Self {
            tokens,
            prompt_len: prompt.len(),
            masked: vec![true; cfg.gen_length],
            current_block: 0,
            active_len: cfg.gen_length,
            block_cfg: cfg,
            mask_id: vocab.mask_id(),
            eot_id: vocab.eot_id(),
            vocab_size: vocab.size(),
            step: 0,
            block_step: 0,
        })
    }

    /// Half-open generation-region range of block `b`, clipped to `active_len`.
    pub fn block_bounds(&self, b: usize) -> Result<(usize, usize)> {
        let blocks = self.block_cfg.num_blocks();
        if b >= blocks {
            return Err(Error::BlockIndex { index: b, blocks });
        }
        let s = self.block_cfg.block_size;
        let start = (b * s).min(self.active_len);
        let end = ((b + 1) * s).min(self.active_len);
        Ok((start, end))
    }

    pub fn block_of(&self, j: usize) -> usize {
        j / self.block_cfg.block_size
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    pub fn prompt(&self) -> &[TokenId] {
        &self.tokens[..self.prompt_len]
    }

    pub fn prompt_len(&self) -> usize {
        self.prompt_len
    }

    /// Generation region up to `active_len`.
    pub fn generation(&self) -> &[TokenId] {
        &self.tokens[self.prompt_len..self.prompt_len + self.active_len]
    }

    /// Prompt plus the active part of the generation region.
    pub fn visible(&self) -> &[TokenId] {
        &self.tokens[..self.prompt_len + self.active_len]
    }

    pub fn masked(&self) -> &[bool] {
        &self.masked[..self.active_len]
    }

    pub fn is_masked(&self, j: usize) -> bool {
        j < self.active_len && self.masked[j]
    }

    pub fn gen_token(&self, j: usize) -> TokenId {
        self.tokens[self.prompt_len + j]
    }

    pub fn current_block(&self) -> usize {
        self.current_block
    }

    pub fn active_len(&self) -> usize {
        self.active_len
    }

    pub fn block_config(&self) -> &BlockConfig {
        &self.block_cfg
    }

    pub fn mask_id(&self) -> TokenId {
        self.mask_id
    }

    pub fn eot_id(&self) -> TokenId {
        self.eot_id
    }

    pub fn vocab_size(&self) -> u32 {
        self.vocab_size
    }

    /// Predictor calls made so far in the whole run.
    pub fn step(&self) -> usize {
        self.step
    }

    /// Predictor calls made so far in the current block.
    pub fn block_step(&self) -> usize {
        self.block_step
    }

    pub fn num_masked_in(&self, start: usize, end: usize) -> usize {
        self.masked[start..end].iter().filter(|&&m| m).count()
    }

    pub fn is_fresh(&self) -> bool {
        self.step == 0 && self.active_len == self.block_cfg.gen_length && self.masked.iter().all(|&m| m)
    }

    /// Writes `token` at masked generation position `j` and clears its flag.
    pub fn commit(&mut self, j: usize, token: TokenId) -> Result<()> {
        if !self.is_masked(j) {
            return Err(Error::Precondition(format!(
                "position {j} is not a masked active position"
            )));
        }
        if token == self.mask_id || token >= self.vocab_size {
            return Err(Error::InvalidToken {
                id: token,
                size: self.vocab_size,
            });
        }
        self.tokens[self.prompt_len + j] = token;
        self.masked[j] = false;
        Ok(())
    }

    /// Generation index of the first committed end-of-text token.
    pub fn first_committed_eot(&self) -> Option<usize> {
        (0..self.active_len).find(|&j| !self.masked[j] && self.gen_token(j) == self.eot_id)
    }

    pub(crate) fn set_active_len(&mut self, len: usize) {
        debug_assert!(len <= self.active_len);
        self.active_len = len;
    }

    pub(crate) fn record_step(&mut self) {
        self.step += 1;
        self.block_step += 1;
    }

    pub(crate) fn enter_block(&mut self, b: usize) {
        self.current_block = b;
        self.block_step = 0;
    }
}

/// Greedy predictions and their confidences for one predictor call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionStep {
    pub predictions: Vec<TokenId>,
    pub confidences: Vec<f64>,
    pub step_index: usize,
    pub block_index: usize,
}

impl PredictionStep {
    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }

    pub fn validate(&self, vocab_size: u32) -> Result<()> {
        if self.predictions.len() != self.confidences.len() {
            return Err(Error::Dimension {
                expected: self.predictions.len(),
                got: self.confidences.len(),
            });
        }
        if let Some(&c) = self.confidences.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::Domain(format!("confidence {c} outside [0, 1]")));
        }
        if let Some(&t) = self.predictions.iter().find(|&&t| t >= vocab_size) {
            return Err(Error::InvalidToken {
                id: t,
                size: vocab_size,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::MASK_ID;

    fn vocab() -> Vocabulary {
        Vocabulary::synthetic(64).unwrap()
    }

    #[test]
    fn fresh_state_layout() {
        let cfg = BlockConfig::new(8, 4).unwrap();
        let s = DecodeState::new(&[5, 7], cfg, &vocab()).unwrap();
        let m = MASK_ID;
        assert_eq!(s.tokens(), &[5, 7, m, m, m, m, m, m, m, m]);
        assert!(s.masked().iter().all(|&x| x));
        assert_eq!(s.current_block(), 0);
        assert_eq!(s.active_len(), 8);
        assert!(s.is_fresh());
    }

    #[test]
    fn block_size_must_divide() {
        assert!(matches!(BlockConfig::new(6, 4), Err(Error::Config(_))));
        assert!(BlockConfig::with_cap(8, 4, 3).is_err());
    }

    #[test]
    fn rejects_bad_prompts() {
        let cfg = BlockConfig::new(8, 4).unwrap();
        assert!(matches!(
            DecodeState::new(&[5, MASK_ID, 7], cfg, &vocab()),
            Err(Error::MaskInPrompt(1))
        ));
        assert!(matches!(
            DecodeState::new(&[5, 64], cfg, &vocab()),
            Err(Error::InvalidToken { id: 64, .. })
        ));
        assert!(DecodeState::new(&[], cfg, &vocab()).is_err());
    }

    #[test]
    fn bounds() {
        let cfg = BlockConfig::new(8, 4).unwrap();
        let mut s = DecodeState::new(&[5], cfg, &vocab()).unwrap();
        assert_eq!(s.block_bounds(0).unwrap(), (0, 4));
        assert_eq!(s.block_bounds(1).unwrap(), (4, 8));
        assert!(matches!(s.block_bounds(2), Err(Error::BlockIndex { .. })));
        s.set_active_len(4);
        assert_eq!(s.block_bounds(1).unwrap(), (4, 4));
    }

    #[test]
    fn commit_clears_flag_once() {
        let cfg = BlockConfig::new(4, 4).unwrap();
        let mut s = DecodeState::new(&[5], cfg, &vocab()).unwrap();
        s.commit(2, 9).unwrap();
        assert_eq!(s.gen_token(2), 9);
        assert!(!s.is_masked(2));
        assert!(s.commit(2, 9).is_err());
        assert!(s.commit(1, MASK_ID).is_err());
        assert_eq!(s.prompt(), &[5]);
    }
}
