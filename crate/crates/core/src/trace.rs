use serde::{Deserialize, Serialize};

use crate::state::PredictionStep;
use crate::vocab::TokenId;

/// One predictor call and what the policy did with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub prediction: PredictionStep,
    /// Generation indices committed at this step, ascending.
    pub committed: Vec<usize>,
    pub fallback: bool,
}

impl TraceStep {
    pub fn committed_confidences(&self) -> Vec<f64> {
        self.committed.iter().map(|&j| self.prediction.confidences[j]).collect()
    }
}

/// Step-by-step record of a decode run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DecodeTrace {
    pub steps: Vec<TraceStep>,
    pub forward_calls: usize,
    pub final_output: Vec<TokenId>,
    pub per_block_steps: Vec<usize>,
    pub fallback_events: usize,
}

impl DecodeTrace {
    pub(crate) fn push(&mut self, step: TraceStep) {
        if step.fallback {
            self.fallback_events += 1;
        }
        let block = step.prediction.block_index;
        if self.per_block_steps.len() <= block {
            self.per_block_steps.resize(block + 1, 0);
        }
        self.per_block_steps[block] += 1;
        self.forward_calls += 1;
        self.steps.push(step);
    }

    /// Tokens committed per predictor call.
    pub fn tokens_per_call(&self) -> f64 {
        if self.forward_calls == 0 {
            0.0
        } else {
            self.final_output.len() as f64 / self.forward_calls as f64
        }
    }

    /// Checks the bookkeeping identities between the step list and counters.
    pub fn is_consistent(&self) -> bool {
        self.forward_calls == self.steps.len()
            && self.per_block_steps.iter().sum::<usize>() == self.forward_calls
            && self.fallback_events == self.steps.iter().filter(|s| s.fallback).count()
    }
}
