use crate::error::{Error, Result};
use crate::predictor::MaskPredictor;
use crate::state::{BlockConfig, DecodeState};
use crate::strategy::{block_confidences, decode_with, StrategyConfig};
use crate::vocab::TokenId;

use super::adamw::{adamw_step, AdamWState};
use super::model::{bce_backward, FilterModel};
use super::train::TrainConfig;

/// Trains `filter` inside EGP decoding: every decode step yields one
/// (confidence, match) pair for the current block and one optimizer update.
pub fn online_train(
    prompts: &[Vec<TokenId>],
    references: &[Vec<TokenId>],
    predictor: &dyn MaskPredictor,
    mut filter: FilterModel,
    block_cfg: BlockConfig,
    cfg: &TrainConfig,
) -> Result<(FilterModel, usize)> {
    if prompts.len() != references.len() {
        return Err(Error::Alignment(format!(
            "{} prompts but {} references",
            prompts.len(),
            references.len()
        )));
    }
    if filter.input_width() != block_cfg.block_size {
        return Err(Error::Config(format!(
            "filter width {} does not match block size {}",
            filter.input_width(),
            block_cfg.block_size
        )));
    }
    let vocab = predictor.vocabulary().clone();
    let opt = cfg.optimizer();
    let mut state = AdamWState::new(&filter);
    let mut updates = 0;
    for (prompt, reference) in prompts.iter().zip(references) {
        let mut reference = reference.clone();
        if reference.len() < block_cfg.gen_length {
            reference.resize(block_cfg.gen_length, vocab.eot_id());
        }
        let strategy = StrategyConfig::egp(reference.clone(), block_cfg.gen_length, vocab.eot_id());
        let decode_state = DecodeState::new(prompt, block_cfg, &vocab)?;
        decode_with(decode_state, predictor, &strategy, |view| {
            let (conf, active) = block_confidences(
                view.prediction,
                view.block.start,
                block_cfg.block_size,
                view.state.masked(),
            );
            let labels: Vec<f64> = (0..block_cfg.block_size)
                .map(|o| {
                    let j = view.block.start + o;
                    let hit = active[o] && view.prediction.predictions[j] == reference[j];
                    f64::from(u8::from(hit))
                })
                .collect();
            let grads = bce_backward(&filter, &conf, &labels, &active)?;
            adamw_step(&mut filter, &grads, &mut state, &opt)?;
            updates += 1;
            Ok(())
        })?;
    }
    Ok((filter, updates))
}
