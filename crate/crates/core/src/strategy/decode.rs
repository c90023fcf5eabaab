use std::ops::Range;

use crate::error::{Error, Result};
use crate::predictor::MaskPredictor;
use rayon::prelude::*;

use crate::state::{BlockConfig, DecodeState, PredictionStep};
use crate::trace::{DecodeTrace, TraceStep};
use crate::vocab::TokenId;

use super::decision::{egp_decision, fallback, learn2pd_decision, vanilla_decision, UnmaskDecision};
use super::{EotpMode, Policy, StrategyConfig};

/// Everything a step observer gets to see, before the commit is applied.
pub struct StepView<'a> {
    pub state: &'a DecodeState,
    pub prediction: &'a PredictionStep,
    pub block: Range<usize>,
    pub decision: &'a UnmaskDecision,
}

/// Drops every position after the first committed end-of-text token.
/// Without such a token the state is returned unchanged.
pub fn eotp_truncate(mut state: DecodeState) -> DecodeState {
    if let Some(e) = state.first_committed_eot() {
        state.set_active_len(e + 1);
    }
    state
}

pub fn decode(
    state: DecodeState,
    predictor: &dyn MaskPredictor,
    cfg: &StrategyConfig,
) -> Result<(Vec<TokenId>, DecodeTrace)> {
    decode_with(state, predictor, cfg, |_| Ok(()))
}

/// [`decode`] with a callback run at every step after the policy decided
/// and before the decision is committed.
pub fn decode_with<F>(
    mut state: DecodeState,
    predictor: &dyn MaskPredictor,
    cfg: &StrategyConfig,
    mut observe: F,
) -> Result<(Vec<TokenId>, DecodeTrace)>
where
    F: FnMut(&StepView<'_>) -> Result<()>,
{
    cfg.validate()?;
    if !state.is_fresh() {
        return Err(Error::Precondition("decode needs a fresh state".into()));
    }
    let vocab = predictor.vocabulary();
    if vocab.size() != state.vocab_size() || vocab.mask_id() != state.mask_id() || vocab.eot_id() != state.eot_id() {
        return Err(Error::Config(
            "predictor vocabulary does not match the decode state".into(),
        ));
    }
    let block_cfg = *state.block_config();
    if let Policy::Egp { reference } = &cfg.policy {
        if reference.len() < block_cfg.gen_length {
            return Err(Error::Config(format!(
                "reference of length {} is shorter than gen_length {}",
                reference.len(),
                block_cfg.gen_length
            )));
        }
    }

    let mut trace = DecodeTrace::default();
    for b in 0..block_cfg.num_blocks() {
        let (start, mut end) = state.block_bounds(b)?;
        if start >= end {
            break;
        }
        state.enter_block(b);
        while state.num_masked_in(start, end) > 0 {
            let pred = predictor.predict(&state);
            if pred.len() != state.active_len() {
                return Err(Error::Dimension {
                    expected: state.active_len(),
                    got: pred.len(),
                });
            }
            let block = start..end;
            let at_cap = state.block_step() + 1 >= block_cfg.max_steps_per_block;
            let masked = state.masked();
            let mut decision = match &cfg.policy {
                Policy::Vanilla { tokens_per_step } => vanilla_decision(&pred, block.clone(), masked, *tokens_per_step),
                Policy::Egp { reference } => egp_decision(&pred, block.clone(), masked, reference, at_cap)?,
                Policy::Learn2pd { filter, tau } => {
                    learn2pd_decision(&pred, block.clone(), block_cfg.block_size, masked, filter, *tau)?
                }
            };
            // a step past the cap always makes progress
            if decision.count() == 0 && at_cap {
                decision = fallback(&pred, &block, masked);
            }
            observe(&StepView {
                state: &state,
                prediction: &pred,
                block: block.clone(),
                decision: &decision,
            })?;
            let committed = decision.positions(&block);
            for &j in &committed {
                state.commit(j, pred.predictions[j])?;
            }
            state.record_step();
            trace.push(TraceStep {
                prediction: pred,
                committed,
                fallback: decision.fallback_used,
            });
            if cfg.eotp == EotpMode::PerStep {
                state = eotp_truncate(state);
                end = end.min(state.active_len());
            }
        }
        if cfg.eotp != EotpMode::Off && state.first_committed_eot().is_some() {
            state = eotp_truncate(state);
            break;
        }
    }
    let output = state.generation().to_vec();
    trace.final_output = output.clone();
    Ok((output, trace))
}

/// Decodes every prompt independently, in parallel, returning results in
/// prompt order. `strategy_for` supplies the configuration of prompt `i`.
pub fn decode_batch<F>(
    prompts: &[Vec<TokenId>],
    predictor: &dyn MaskPredictor,
    block_cfg: BlockConfig,
    strategy_for: F,
) -> Result<Vec<(Vec<TokenId>, DecodeTrace)>>
where
    F: Fn(usize) -> StrategyConfig + Sync,
{
    let vocab = predictor.vocabulary();
    prompts
        .par_iter()
        .enumerate()
        .map(|(i, prompt)| {
            let state = DecodeState::new(prompt, block_cfg, vocab)?;
            decode(state, predictor, &strategy_for(i))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::{Script, ScriptedPredictor};
    use crate::vocab::Vocabulary;

    fn setup(gen: usize, block: usize, reference: Vec<TokenId>) -> (ScriptedPredictor, DecodeState) {
        let vocab = Vocabulary::synthetic(64).unwrap();
        let p = ScriptedPredictor::new(vocab.clone(), Script::all_correct(reference));
        let s = DecodeState::new(&[7, 8], BlockConfig::new(gen, block).unwrap(), &vocab).unwrap();
        (p, s)
    }

    #[test]
    fn egp_one_call_per_block_when_all_correct() {
        let reference: Vec<TokenId> = (0..16).map(|i| 2 + i).collect();
        let (p, s) = setup(16, 4, reference.clone());
        let (out, trace) = decode(s, &p, &StrategyConfig::egp(reference.clone(), 16, 1)).unwrap();
        assert_eq!(out, reference);
        assert_eq!(trace.forward_calls, 4);
        assert_eq!(trace.per_block_steps, vec![1, 1, 1, 1]);
        assert!(trace.is_consistent());
    }

    #[test]
    fn vanilla_one_commit_per_call() {
        let reference: Vec<TokenId> = (0..128).map(|i| 2 + i % 60).collect();
        let (p, s) = setup(128, 32, reference.clone());
        let (out, trace) = decode(s, &p, &StrategyConfig::vanilla(1)).unwrap();
        assert_eq!(out, reference);
        assert_eq!(trace.forward_calls, 128);
        assert_eq!(trace.per_block_steps, vec![32; 4]);
        assert_eq!(trace.fallback_events, 0);
    }

    #[test]
    fn egp_never_correct_position_hits_cap() {
        let vocab = Vocabulary::synthetic(64).unwrap();
        let mut script = Script::all_correct(vec![2, 3, 4, 5]);
        script.first_correct_step = vec![0, 0, 1000, 0];
        let p = ScriptedPredictor::new(vocab.clone(), script);
        let cfg = BlockConfig::with_cap(4, 4, 6).unwrap();
        let s = DecodeState::new(&[7], cfg, &vocab).unwrap();
        let (out, trace) = decode(s, &p, &StrategyConfig::egp(vec![2, 3, 4, 5], 4, 1)).unwrap();
        assert_eq!(trace.forward_calls, 6);
        assert_eq!(trace.fallback_events, 1);
        assert!(trace.steps.last().unwrap().fallback);
        assert_ne!(out[2], 4);
    }

    #[test]
    fn eotp_stops_after_block_with_eot() {
        let mut reference: Vec<TokenId> = vec![2, 3, 4, 1];
        reference.resize(1024, 1);
        let (p, s) = setup(1024, 32, reference);
        let cfg = StrategyConfig::egp(vec![2, 3, 4, 1], 1024, 1).with_eotp(EotpMode::BlockEnd);
        let (out, trace) = decode(s, &p, &cfg).unwrap();
        assert_eq!(out, vec![2, 3, 4, 1]);
        assert_eq!(trace.forward_calls, 1);
        assert_eq!(trace.per_block_steps.len(), 1);
    }

    #[test]
    fn truncate_at_first_committed_eot() {
        let vocab = Vocabulary::synthetic(64).unwrap();
        let mut s = DecodeState::new(&[7], BlockConfig::new(16, 4).unwrap(), &vocab).unwrap();
        s.commit(5, 1).unwrap();
        assert_eq!(eotp_truncate(s.clone()).active_len(), 6);
        s.commit(3, 1).unwrap();
        s.commit(9, 1).unwrap();
        assert_eq!(eotp_truncate(s.clone()).active_len(), 4);

        let fresh = DecodeState::new(&[7], BlockConfig::new(16, 4).unwrap(), &vocab).unwrap();
        assert_eq!(eotp_truncate(fresh.clone()), fresh);
    }

    #[test]
    fn rejects_vocab_mismatch_and_used_state() {
        let (p, s) = setup(4, 4, vec![2; 4]);
        let other = Vocabulary::synthetic(32).unwrap();
        let s2 = DecodeState::new(&[7], BlockConfig::new(4, 4).unwrap(), &other).unwrap();
        assert!(matches!(
            decode(s2, &p, &StrategyConfig::vanilla(1)),
            Err(Error::Config(_))
        ));
        let mut used = s.clone();
        used.commit(0, 2).unwrap();
        assert!(decode(used, &p, &StrategyConfig::vanilla(1)).is_err());
        let no_ref = StrategyConfig {
            policy: Policy::Egp { reference: vec![] },
            eotp: EotpMode::Off,
        };
        assert!(matches!(decode(s, &p, &no_ref), Err(Error::Config(_))));
    }
}
