//! Semi-autoregressive block decoding and the unmask policies.
//!
//! Blocks of the generation region are decoded left to right. Inside a
//! block every step calls the predictor once, asks the policy which masked
//! positions to commit, and writes the committed predictions. The block is
//! done when nothing in it is masked.
//!
//! Policies:
//! - vanilla: commit the `k` most confident masked positions per step;
//! - EGP: commit exactly the positions whose prediction equals a known
//!   reference (an oracle, used for analysis and for collecting training data);
//! - Learn2PD: feed the block's confidence vector to a small filter network
//!   and commit positions whose keep probability exceeds `tau`.
//!
//! When a step would commit nothing, the single most confident masked
//! position is force-committed and the step is flagged as a fallback. EGP
//! only does this once the block has used `max_steps_per_block` calls.
//!
//! With end-of-text early termination enabled, decoding stops after the
//! first block in which an end-of-text token was committed, and everything
//! after that token is dropped.

mod decision;
mod decode;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use decision::{block_confidences, egp_decision, learn2pd_decision, vanilla_decision, UnmaskDecision};
pub use decode::{decode, decode_batch, decode_with, eotp_truncate, StepView};

use crate::error::{Error, Result};
use crate::filter::FilterModel;
use crate::vocab::TokenId;

/// Default filter threshold.
pub const DEFAULT_TAU: f64 = 0.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Vanilla,
    Egp,
    Learn2pd,
}

impl StrategyKind {
    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Vanilla => "vanilla",
            StrategyKind::Egp => "egp",
            StrategyKind::Learn2pd => "learn2pd",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(StrategyKind::Vanilla),
            "egp" => Ok(StrategyKind::Egp),
            "learn2pd" => Ok(StrategyKind::Learn2pd),
            other => Err(Error::Config(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Vanilla { tokens_per_step: usize },
    Egp { reference: Vec<TokenId> },
    Learn2pd { filter: Arc<FilterModel>, tau: f64 },
}

impl Policy {
    pub fn kind(&self) -> StrategyKind {
        match self {
            Policy::Vanilla { .. } => StrategyKind::Vanilla,
            Policy::Egp { .. } => StrategyKind::Egp,
            Policy::Learn2pd { .. } => StrategyKind::Learn2pd,
        }
    }
}

/// When end-of-text early termination is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EotpMode {
    #[default]
    Off,
    /// Truncate and stop once the block holding the first committed
    /// end-of-text token is complete.
    BlockEnd,
    /// Drop positions after a committed end-of-text token as soon as it is
    /// committed; the current block still finishes.
    PerStep,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyConfig {
    pub policy: Policy,
    pub eotp: EotpMode,
}

impl StrategyConfig {
    pub fn vanilla(tokens_per_step: usize) -> Self {
        Self {
            policy: Policy::Vanilla { tokens_per_step },
            eotp: EotpMode::Off,
        }
    }

    /// EGP driven by `reference`, padded with `eot` up to `gen_length`.
    pub fn egp(mut reference: Vec<TokenId>, gen_length: usize, eot: TokenId) -> Self {
        if reference.len() < gen_length {
            reference.resize(gen_length, eot);
        }
        Self {
            policy: Policy::Egp { reference },
            eotp: EotpMode::Off,
        }
    }

    pub fn learn2pd(filter: Arc<FilterModel>, tau: f64) -> Self {
        Self {
            policy: Policy::Learn2pd { filter, tau },
            eotp: EotpMode::Off,
        }
    }

    pub fn with_eotp(mut self, mode: EotpMode) -> Self {
        self.eotp = mode;
        self
    }

    pub fn kind(&self) -> StrategyKind {
        self.policy.kind()
    }

    pub fn validate(&self) -> Result<()> {
        match &self.policy {
            Policy::Vanilla { tokens_per_step } if *tokens_per_step == 0 => {
                Err(Error::Config("tokens_per_step must be positive".into()))
            }
            Policy::Learn2pd { tau, .. } if !(0.0..1.0).contains(tau) => {
                Err(Error::Config(format!("tau {tau} outside [0, 1)")))
            }
            _ => Ok(()),
        }
    }
}
