//! Semi-autoregressive masked-diffusion decoding with learned parallel
//! unmasking.
//!
//! A [`predictor::MaskPredictor`] fills every masked position of a block
//! with its greedy guess and a confidence. A policy from [`strategy`] decides
//! which guesses to keep. The learned policy runs a small MLP from
//! [`filter`] over the block's confidence vector; the filter is trained on
//! samples that [`collect`] harvests from an oracle that keeps exactly the
//! guesses that are already right.

pub mod collect;
pub mod diffusion;
pub mod error;
pub mod filter;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod predictor;
pub mod rng;
pub mod state;
pub mod strategy;
pub mod toy;
pub mod trace;
pub mod vocab;

pub use error::{Error, Result};
pub use filter::{FilterModel, TrainConfig, TrainingSample};
pub use predictor::{MaskPredictor, NGramPredictor, ScriptedPredictor};
pub use state::{BlockConfig, DecodeState, PredictionStep};
pub use strategy::{decode, EotpMode, StrategyConfig, StrategyKind};
pub use trace::{DecodeTrace, TraceStep};
pub use vocab::{TokenId, Vocabulary};
