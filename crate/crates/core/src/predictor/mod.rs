//! Mask predictor backends.
//!
//! A predictor looks at a partially masked [`DecodeState`] and returns, for
//! every active generation position, its greedy token and the probability it
//! assigns to that token. Positions that are already committed report their
//! committed token with confidence 1.0.

mod ngram;
mod scripted;

pub use ngram::{train_ngram, NGramPredictor};
pub use scripted::{ConfidenceSchedule, Script, ScriptedPredictor, WrongTokenPolicy};

use crate::state::{DecodeState, PredictionStep};
use crate::vocab::Vocabulary;

pub trait MaskPredictor: Send + Sync {
    fn vocabulary(&self) -> &Vocabulary;

    fn predict(&self, state: &DecodeState) -> PredictionStep;
}

impl<P: MaskPredictor + ?Sized> MaskPredictor for &P {
    fn vocabulary(&self) -> &Vocabulary {
        (**self).vocabulary()
    }

    fn predict(&self, state: &DecodeState) -> PredictionStep {
        (**self).predict(state)
    }
}

impl<P: MaskPredictor + ?Sized> MaskPredictor for Box<P> {
    fn vocabulary(&self) -> &Vocabulary {
        (**self).vocabulary()
    }

    fn predict(&self, state: &DecodeState) -> PredictionStep {
        (**self).predict(state)
    }
}

impl<P: MaskPredictor + ?Sized> MaskPredictor for std::sync::Arc<P> {
    fn vocabulary(&self) -> &Vocabulary {
        (**self).vocabulary()
    }

    fn predict(&self, state: &DecodeState) -> PredictionStep {
        (**self).predict(state)
    }
}
