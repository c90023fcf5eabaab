use std::ops::Range;

use crate::error::{Error, Result};
use crate::filter::{sigmoid, FilterModel};
use crate::state::PredictionStep;
use crate::vocab::TokenId;

/// Which positions of a block to commit at one step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnmaskDecision {
    /// Indexed by offset inside the block; only masked positions can be true.
    pub commit: Vec<bool>,
    pub fallback_used: bool,
}

impl UnmaskDecision {
    pub fn none(len: usize) -> Self {
        Self {
            commit: vec![false; len],
            fallback_used: false,
        }
    }

    pub fn count(&self) -> usize {
        self.commit.iter().filter(|&&c| c).count()
    }

    /// Generation indices to commit, ascending.
    pub fn positions(&self, block: &Range<usize>) -> Vec<usize> {
        self.commit
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c)
            .map(|(o, _)| block.start + o)
            .collect()
    }
}

fn masked_in_block<'a>(block: &'a Range<usize>, masked: &'a [bool]) -> impl Iterator<Item = usize> + 'a {
    block.clone().filter(move |&j| masked.get(j).copied().unwrap_or(false))
}

/// Masked block positions ordered by confidence, highest first; ties go to
/// the leftmost position.
fn by_confidence(pred: &PredictionStep, block: &Range<usize>, masked: &[bool]) -> Vec<usize> {
    let mut idx: Vec<usize> = masked_in_block(block, masked).collect();
    idx.sort_by(|&a, &b| {
        pred.confidences[b]
            .partial_cmp(&pred.confidences[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

/// Force-commits the most confident masked position.
pub(crate) fn fallback(pred: &PredictionStep, block: &Range<usize>, masked: &[bool]) -> UnmaskDecision {
    let mut d = UnmaskDecision::none(block.len());
    if let Some(&j) = by_confidence(pred, block, masked).first() {
        d.commit[j - block.start] = true;
        d.fallback_used = true;
    }
    d
}

/// Low-confidence remasking: keep the `k` most confident predictions.
pub fn vanilla_decision(pred: &PredictionStep, block: Range<usize>, masked: &[bool], k: usize) -> UnmaskDecision {
    let mut d = UnmaskDecision::none(block.len());
    for j in by_confidence(pred, &block, masked).into_iter().take(k) {
        d.commit[j - block.start] = true;
    }
    d
}

/// Oracle policy: commit exactly the masked positions predicted correctly.
///
/// When nothing matches and `at_cap` is set, the most confident masked
/// position is committed instead.
pub fn egp_decision(
    pred: &PredictionStep,
    block: Range<usize>,
    masked: &[bool],
    reference: &[TokenId],
    at_cap: bool,
) -> Result<UnmaskDecision> {
    if reference.len() < block.end {
        return Err(Error::Config(format!(
            "reference of length {} does not cover block ending at {}",
            reference.len(),
            block.end
        )));
    }
    let mut d = UnmaskDecision::none(block.len());
    for j in masked_in_block(&block, masked) {
        d.commit[j - block.start] = pred.predictions[j] == reference[j];
    }
    if d.count() == 0 && at_cap {
        return Ok(fallback(pred, &block, masked));
    }
    Ok(d)
}

/// Filter input for a block: the step's confidences at masked positions and
/// 1.0 everywhere else (committed, or past the active length). Also returns
/// the masked flags for the same `width` positions.
pub fn block_confidences(
    pred: &PredictionStep,
    block_start: usize,
    width: usize,
    masked: &[bool],
) -> (Vec<f64>, Vec<bool>) {
    (block_start..block_start + width)
        .map(|j| {
            if masked.get(j).copied().unwrap_or(false) {
                (pred.confidences[j], true)
            } else {
                (1.0, false)
            }
        })
        .unzip()
}

/// Learned policy: commit masked positions whose filter keep probability
/// exceeds `tau`, falling back to the single most confident one.
pub fn learn2pd_decision(
    pred: &PredictionStep,
    block: Range<usize>,
    block_size: usize,
    masked: &[bool],
    filter: &FilterModel,
    tau: f64,
) -> Result<UnmaskDecision> {
    if filter.input_width() != block_size || filter.output_width() != block_size {
        return Err(Error::Config(format!(
            "filter width {} does not match block size {block_size}",
            filter.input_width()
        )));
    }
    let (conf, active) = block_confidences(pred, block.start, block_size, masked);
    let logits = filter.forward(&conf)?;
    let mut d = UnmaskDecision::none(block.len());
    for o in 0..block.len() {
        d.commit[o] = active[o] && sigmoid(logits[o]) > tau;
    }
    if d.count() == 0 {
        return Ok(fallback(pred, &block, masked));
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{Activation, FilterModel};

    fn step(conf: &[f64], preds: &[TokenId]) -> PredictionStep {
        PredictionStep {
            predictions: preds.to_vec(),
            confidences: conf.to_vec(),
            step_index: 0,
            block_index: 0,
        }
    }

    #[test]
    fn vanilla_picks_most_confident() {
        let p = step(&[0.1, 0.9, 0.5, 0.2], &[2, 3, 4, 5]);
        let d = vanilla_decision(&p, 0..4, &[true; 4], 1);
        assert_eq!(d.commit, vec![false, true, false, false]);
        assert!(!d.fallback_used);
        let d = vanilla_decision(&p, 0..4, &[true; 4], 4);
        assert_eq!(d.count(), 4);
        let d = vanilla_decision(&p, 0..4, &[true, false, true, true], 2);
        assert_eq!(d.commit, vec![false, false, true, true]);
    }

    #[test]
    fn vanilla_ties_go_left() {
        let p = step(&[0.5; 4], &[2; 4]);
        let d = vanilla_decision(&p, 0..4, &[false, true, true, true], 1);
        assert_eq!(d.commit, vec![false, true, false, false]);
    }

    #[test]
    fn egp_matches_reference() {
        let p = step(&[0.5; 4], &[2, 3, 9, 5]);
        let d = egp_decision(&p, 0..4, &[true; 4], &[2, 3, 4, 5], false).unwrap();
        assert_eq!(d.commit, vec![true, true, false, true]);
        assert!(egp_decision(&p, 0..4, &[true; 4], &[2, 3], false).is_err());
    }

    #[test]
    fn egp_falls_back_only_at_cap() {
        let p = step(&[0.2, 0.7, 0.1, 0.3], &[9; 4]);
        let d = egp_decision(&p, 0..4, &[true; 4], &[2, 3, 4, 5], false).unwrap();
        assert_eq!(d.count(), 0);
        let d = egp_decision(&p, 0..4, &[true; 4], &[2, 3, 4, 5], true).unwrap();
        assert_eq!(d.commit, vec![false, true, false, false]);
        assert!(d.fallback_used);
    }

    #[test]
    fn learn2pd_threshold_extremes() {
        let p = step(&[0.2, 0.7, 0.1, 0.3], &[9; 4]);
        let zero = FilterModel::zeros(&[4, 4, 4], Activation::Relu).unwrap();
        let d = learn2pd_decision(&p, 0..4, 4, &[true; 4], &zero, 0.0).unwrap();
        assert_eq!(d.count(), 4);
        assert!(!d.fallback_used);
        let d = learn2pd_decision(&p, 0..4, 4, &[true; 4], &zero, 0.96).unwrap();
        assert_eq!(d.commit, vec![false, true, false, false]);
        assert!(d.fallback_used);
        let d = learn2pd_decision(&p, 0..4, 4, &[true; 4], &zero, 1.0 - 1e-12).unwrap();
        assert_eq!(d.count(), 1);
        assert!(d.fallback_used);
    }

    #[test]
    fn learn2pd_rejects_wrong_width() {
        let p = step(&[0.5; 4], &[2; 4]);
        let f = FilterModel::zeros(&[3, 3, 3], Activation::Relu).unwrap();
        assert!(matches!(
            learn2pd_decision(&p, 0..4, 4, &[true; 4], &f, 0.5),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn committed_positions_feed_certainty() {
        let p = step(&[0.2, 0.7, 0.1, 0.3, 0.4], &[9; 5]);
        let (conf, active) = block_confidences(&p, 2, 4, &[true, true, false, true, true]);
        assert_eq!(conf, vec![1.0, 0.3, 0.4, 1.0]);
        assert_eq!(active, vec![false, true, true, false]);
    }
}
