use std::collections::HashMap;

use crate::state::{DecodeState, PredictionStep};
use crate::vocab::{TokenId, Vocabulary, FIRST_ORDINARY_ID};

use super::MaskPredictor;

/// How a scripted position picks its token before it becomes correct.
#[derive(Debug, Clone, PartialEq)]
pub enum WrongTokenPolicy {
    /// Cycle `offset` places forward through the ordinary ids, skipping the
    /// reference token.
    Shift(u32),
    /// Always emit this token (it must differ from every reference token it
    /// stands in for).
    Fixed(TokenId),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfidenceSchedule {
    Constant {
        correct: f64,
        wrong: f64,
    },
    /// Per generation position confidences; positions past the end reuse the
    /// last entry.
    PerPosition {
        correct: Vec<f64>,
        wrong: Vec<f64>,
    },
}

impl ConfidenceSchedule {
    fn confidence(&self, j: usize, correct: bool) -> f64 {
        match self {
            ConfidenceSchedule::Constant { correct: c, wrong: w } => {
                if correct {
                    *c
                } else {
                    *w
                }
            }
            ConfidenceSchedule::PerPosition { correct: c, wrong: w } => {
                let table = if correct { c } else { w };
                table.get(j).or(table.last()).copied().unwrap_or(0.5)
            }
        }
    }
}

/// Target behaviour for one prompt.
///
/// Position `j` predicts a wrong token until the block-local step reaches
/// `first_correct_step[j]`, and the reference token from then on. Positions
/// past the end of `reference` are end-of-text padding that is correct from
/// step 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Script {
    pub reference: Vec<TokenId>,
    pub first_correct_step: Vec<usize>,
    pub wrong_token: WrongTokenPolicy,
    pub confidence: ConfidenceSchedule,
}

impl Script {
    /// Every position correct from the first call, constant confidence.
    pub fn all_correct(reference: Vec<TokenId>) -> Self {
        let n = reference.len();
        Self {
            reference,
            first_correct_step: vec![0; n],
            wrong_token: WrongTokenPolicy::Shift(1),
            confidence: ConfidenceSchedule::Constant {
                correct: 0.9,
                wrong: 0.3,
            },
        }
    }
}

/// Deterministic test predictor that replays a [`Script`].
///
/// The step that matters for position `j` is the number of predictor calls
/// already made inside `j`'s block; blocks that have not started yet are at
/// step 0.
#[derive(Debug, Clone)]
pub struct ScriptedPredictor {
    vocab: Vocabulary,
    default: Option<Script>,
    by_prompt: HashMap<Vec<TokenId>, Script>,
}

impl ScriptedPredictor {
    pub fn new(vocab: Vocabulary, script: Script) -> Self {
        Self {
            vocab,
            default: Some(script),
            by_prompt: HashMap::new(),
        }
    }

    pub fn with_scripts(vocab: Vocabulary, scripts: HashMap<Vec<TokenId>, Script>) -> Self {
        Self {
            vocab,
            default: None,
            by_prompt: scripts,
        }
    }

    pub fn insert(&mut self, prompt: Vec<TokenId>, script: Script) {
        self.by_prompt.insert(prompt, script);
    }

    pub fn script_for(&self, prompt: &[TokenId]) -> Option<&Script> {
        self.by_prompt.get(prompt).or(self.default.as_ref())
    }

    fn reference_at(&self, script: &Script, j: usize) -> TokenId {
        script.reference.get(j).copied().unwrap_or(self.vocab.eot_id())
    }

    fn wrong_token(&self, policy: &WrongTokenPolicy, reference: TokenId) -> TokenId {
        match *policy {
            WrongTokenPolicy::Fixed(t) => t,
            WrongTokenPolicy::Shift(offset) => {
                let first = FIRST_ORDINARY_ID;
                let n = self.vocab.size().saturating_sub(first).max(2);
                let base = reference.saturating_sub(first) % n;
                let mut shift = offset % n;
                if shift == 0 {
                    shift = 1;
                }
                first + (base + shift) % n
            }
        }
    }
}

impl MaskPredictor for ScriptedPredictor {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn predict(&self, state: &DecodeState) -> PredictionStep {
        let n = state.active_len();
        let mut predictions = Vec::with_capacity(n);
        let mut confidences = Vec::with_capacity(n);
        let script = self.script_for(state.prompt());
        for j in 0..n {
            if !state.is_masked(j) {
                predictions.push(state.gen_token(j));
                confidences.push(1.0);
                continue;
            }
            let Some(script) = script else {
                predictions.push(self.vocab.eot_id());
                confidences.push(0.0);
                continue;
            };
            let reference = self.reference_at(script, j);
            let step = if state.block_of(j) == state.current_block() {
                state.block_step()
            } else {
                0
            };
            let first = script.first_correct_step.get(j).copied().unwrap_or(0);
            let correct = step >= first;
            let token = if correct {
                reference
            } else {
                self.wrong_token(&script.wrong_token, reference)
            };
            predictions.push(token);
            confidences.push(script.confidence.confidence(j, correct).clamp(0.0, 1.0));
        }
        PredictionStep {
            predictions,
            confidences,
            step_index: state.step(),
            block_index: state.current_block(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::BlockConfig;

    #[test]
    fn correct_from_first_step() {
        let vocab = Vocabulary::synthetic(16).unwrap();
        let reference: Vec<TokenId> = vec![3, 4, 5, 6];
        let p = ScriptedPredictor::new(vocab.clone(), Script::all_correct(reference.clone()));
        let state = DecodeState::new(&[2], BlockConfig::new(4, 4).unwrap(), &vocab).unwrap();
        assert_eq!(p.predict(&state).predictions, reference);
    }

    #[test]
    fn wrong_until_first_correct_step() {
        let vocab = Vocabulary::synthetic(16).unwrap();
        let mut script = Script::all_correct(vec![3, 4]);
        script.first_correct_step = vec![0, 2];
        let p = ScriptedPredictor::new(vocab.clone(), script);
        let mut state = DecodeState::new(&[2], BlockConfig::new(2, 2).unwrap(), &vocab).unwrap();
        state.record_step();
        let pred = p.predict(&state);
        assert_eq!(pred.predictions[0], 3);
        assert_ne!(pred.predictions[1], 4);
        assert_ne!(pred.predictions[1], vocab.mask_id());
        state.record_step();
        assert_eq!(p.predict(&state).predictions, vec![3, 4]);
    }

    #[test]
    fn shift_never_hits_reference_or_reserved() {
        let vocab = Vocabulary::synthetic(10).unwrap();
        let p = ScriptedPredictor::new(vocab.clone(), Script::all_correct(vec![]));
        for r in 0..10 {
            for off in 0..12 {
                let w = p.wrong_token(&WrongTokenPolicy::Shift(off), r);
                assert_ne!(w, r);
                assert!((FIRST_ORDINARY_ID..10).contains(&w));
            }
        }
    }

    #[test]
    fn committed_positions_report_certainty() {
        let vocab = Vocabulary::synthetic(16).unwrap();
        let p = ScriptedPredictor::new(vocab.clone(), Script::all_correct(vec![3, 4]));
        let mut state = DecodeState::new(&[2], BlockConfig::new(2, 2).unwrap(), &vocab).unwrap();
        state.commit(1, 9).unwrap();
        let pred = p.predict(&state);
        assert_eq!(pred.predictions[1], 9);
        assert_eq!(pred.confidences[1], 1.0);
    }
}
