//! Training-data collection: run the EGP oracle over prompts and record, at
//! every step, the block's confidence vector and which predictions already
//! match the reference.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::TrainingSample;
use crate::predictor::MaskPredictor;
use crate::state::{BlockConfig, DecodeState};
use crate::strategy::{block_confidences, decode_batch, decode_with, StrategyConfig};
use crate::vocab::TokenId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub prompt: usize,
    pub block: usize,
    pub step: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CollectionRun {
    pub samples: Vec<TrainingSample>,
    pub provenance: Vec<Provenance>,
    /// Predictor calls of all EGP runs together.
    pub forward_calls: usize,
}

/// Reference answers as the predictor's own output under vanilla decoding
/// with `tokens_per_step` commits per step.
pub fn vanilla_references(
    prompts: &[Vec<TokenId>],
    predictor: &dyn MaskPredictor,
    block_cfg: BlockConfig,
    tokens_per_step: usize,
) -> Result<Vec<Vec<TokenId>>> {
    Ok(decode_batch(prompts, predictor, block_cfg, |_| {
        StrategyConfig::vanilla(tokens_per_step)
    })?
    .into_iter()
    .map(|(out, _)| out)
    .collect())
}

fn collect_one(
    index: usize,
    prompt: &[TokenId],
    reference: &[TokenId],
    predictor: &dyn MaskPredictor,
    block_cfg: BlockConfig,
) -> Result<(Vec<TrainingSample>, Vec<Provenance>, usize)> {
    let vocab = predictor.vocabulary();
    let mut reference = reference.to_vec();
    reference.resize(block_cfg.gen_length, vocab.eot_id());
    let strategy = StrategyConfig::egp(reference.clone(), block_cfg.gen_length, vocab.eot_id());
    let mut samples = Vec::new();
    let mut provenance = Vec::new();
    let state = DecodeState::new(prompt, block_cfg, vocab)?;
    let (_, trace) = decode_with(state, predictor, &strategy, |view| {
        let (conf, mask_active) = block_confidences(
            view.prediction,
            view.block.start,
            block_cfg.block_size,
            view.state.masked(),
        );
        let labels = (0..block_cfg.block_size)
            .map(|o| {
                let j = view.block.start + o;
                let hit = j < view.prediction.len() && view.prediction.predictions[j] == reference[j];
                u8::from(hit)
            })
            .collect();
        samples.push(TrainingSample {
            conf,
            labels,
            mask_active,
        });
        provenance.push(Provenance {
            prompt: index,
            block: view.prediction.block_index,
            step: view.state.step(),
        });
        Ok(())
    })?;
    Ok((samples, provenance, trace.forward_calls))
}

/// One sample per EGP decode step over every prompt, in prompt order.
pub fn collect_samples(
    prompts: &[Vec<TokenId>],
    references: &[Vec<TokenId>],
    predictor: &dyn MaskPredictor,
    block_cfg: BlockConfig,
) -> Result<CollectionRun> {
    if prompts.len() != references.len() {
        return Err(Error::Alignment(format!(
            "{} prompts but {} references",
            prompts.len(),
            references.len()
        )));
    }
    if let Some(i) = references.iter().position(|r| r.len() > block_cfg.gen_length) {
        return Err(Error::Alignment(format!(
            "reference {i} is longer than gen_length {}",
            block_cfg.gen_length
        )));
    }
    let parts: Vec<_> = prompts
        .par_iter()
        .zip(references.par_iter())
        .enumerate()
        .map(|(i, (p, r))| collect_one(i, p, r, predictor, block_cfg))
        .collect::<Result<_>>()?;
    let mut run = CollectionRun::default();
    for (samples, provenance, calls) in parts {
        run.samples.extend(samples);
        run.provenance.extend(provenance);
        run.forward_calls += calls;
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::{Script, ScriptedPredictor};
    use crate::vocab::Vocabulary;

    fn predictor(script: Script) -> ScriptedPredictor {
        ScriptedPredictor::new(Vocabulary::synthetic(64).unwrap(), script)
    }

    #[test]
    fn one_sample_when_all_correct() {
        let reference = vec![2, 3, 4, 5];
        let p = predictor(Script::all_correct(reference.clone()));
        let run = collect_samples(&[vec![9]], &[reference], &p, BlockConfig::new(4, 4).unwrap()).unwrap();
        assert_eq!(run.samples.len(), 1);
        assert_eq!(run.samples[0].labels, vec![1; 4]);
        assert_eq!(run.forward_calls, 1);
    }

    #[test]
    fn alternating_schedule_gives_two_samples_per_block() {
        let reference: Vec<TokenId> = (2..10).collect();
        let mut script = Script::all_correct(reference.clone());
        script.first_correct_step = (0..8).map(|j| j % 2).collect();
        let p = predictor(script);
        let run = collect_samples(&[vec![9]], &[reference], &p, BlockConfig::new(8, 4).unwrap()).unwrap();
        assert_eq!(run.samples.len(), 4);
        for pair in run.samples.chunks(2) {
            assert_eq!(pair[0].labels, vec![1, 0, 1, 0]);
            assert_eq!(pair[0].mask_active, vec![true; 4]);
            assert_eq!(pair[1].mask_active, vec![false, true, false, true]);
            assert_eq!(pair[1].labels, vec![1; 4]);
        }
        let blocks: Vec<usize> = run.provenance.iter().map(|p| p.block).collect();
        assert_eq!(blocks, vec![0, 0, 1, 1]);
    }

    #[test]
    fn empty_and_misaligned_inputs() {
        let p = predictor(Script::all_correct(vec![]));
        let cfg = BlockConfig::new(4, 4).unwrap();
        let run = collect_samples(&[], &[], &p, cfg).unwrap();
        assert!(run.samples.is_empty());
        assert!(matches!(
            collect_samples(&[vec![9]], &[], &p, cfg),
            Err(Error::Alignment(_))
        ));
        assert!(matches!(
            collect_samples(&[vec![9]], &[vec![2; 5]], &p, cfg),
            Err(Error::Alignment(_))
        ));
    }
}
