//! Analyses over decode traces: step gaps, steps per block, speedup tables
//! and exact-match scoring.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::DecodeTrace;
use crate::vocab::TokenId;

/// How many calls each position waited after its prediction first matched
/// its final value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepGaps {
    /// Indexed by generation position.
    pub gaps: Vec<usize>,
    /// gap -> number of positions.
    pub histogram: BTreeMap<usize, usize>,
}

/// Gap per position between the step that committed it and the first step
/// of its block whose prediction already equalled the committed token.
pub fn step_gap_analysis(trace: &DecodeTrace) -> Result<StepGaps> {
    let n = trace.final_output.len();
    let mut commit_step = vec![None; n];
    for (s, step) in trace.steps.iter().enumerate() {
        for &j in &step.committed {
            if j < n {
                commit_step[j] = Some(s);
            }
        }
    }
    let mut gaps = Vec::with_capacity(n);
    for (j, committed) in commit_step.iter().enumerate() {
        let c = committed.ok_or_else(|| Error::Analysis(format!("position {j} was never committed")))?;
        let block = trace.steps[c].prediction.block_index;
        let target = trace.final_output[j];
        let first = (0..=c)
            .find(|&s| {
                let p = &trace.steps[s].prediction;
                p.block_index == block && p.predictions.get(j) == Some(&target)
            })
            .unwrap_or(c);
        gaps.push(c - first);
    }
    let mut histogram = BTreeMap::new();
    for &g in &gaps {
        *histogram.entry(g).or_insert(0) += 1;
    }
    Ok(StepGaps { gaps, histogram })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSteps {
    pub per_block: Vec<usize>,
    pub median: f64,
    pub mean: f64,
}

pub fn steps_per_block(trace: &DecodeTrace) -> BlockSteps {
    summarize_steps(trace.per_block_steps.clone())
}

/// Median and mean over any collection of per-block step counts.
pub fn summarize_steps(per_block: Vec<usize>) -> BlockSteps {
    let mut sorted = per_block.clone();
    sorted.sort_unstable();
    let n = sorted.len();
    let median = match n {
        0 => 0.0,
        _ if n % 2 == 1 => sorted[n / 2] as f64,
        _ => (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0,
    };
    let mean = if n == 0 {
        0.0
    } else {
        sorted.iter().sum::<usize>() as f64 / n as f64
    };
    BlockSteps {
        per_block,
        median,
        mean,
    }
}

/// Prefix before the first end-of-text token.
pub fn truncate_at_eot(tokens: &[TokenId], eot: TokenId) -> &[TokenId] {
    match tokens.iter().position(|&t| t == eot) {
        Some(e) => &tokens[..e],
        None => tokens,
    }
}

/// Equality after cutting both sequences at their first end-of-text token.
pub fn exact_match(output: &[TokenId], reference: &[TokenId], eot: TokenId) -> bool {
    truncate_at_eot(output, eot) == truncate_at_eot(reference, eot)
}

pub fn exact_match_rate(outputs: &[Vec<TokenId>], references: &[Vec<TokenId>], eot: TokenId) -> Result<f64> {
    if outputs.len() != references.len() {
        return Err(Error::Alignment(format!(
            "{} outputs but {} references",
            outputs.len(),
            references.len()
        )));
    }
    if outputs.is_empty() {
        return Ok(0.0);
    }
    let hits = outputs
        .iter()
        .zip(references)
        .filter(|(o, r)| exact_match(o, r, eot))
        .count();
    Ok(hits as f64 / outputs.len() as f64)
}

/// Answer length: tokens up to and including the first end-of-text token.
pub fn emitted_tokens(output: &[TokenId], eot: TokenId) -> usize {
    match output.iter().position(|&t| t == eot) {
        Some(e) => e + 1,
        None => output.len(),
    }
}

/// All runs of one strategy over a prompt set.
#[derive(Debug, Clone)]
pub struct RunSet<'a> {
    pub label: String,
    pub prompts: &'a [Vec<TokenId>],
    pub traces: &'a [DecodeTrace],
    pub wall_seconds: Option<f64>,
}

impl RunSet<'_> {
    pub fn forward_calls(&self) -> usize {
        self.traces.iter().map(|t| t.forward_calls).sum()
    }

    pub fn outputs(&self) -> Vec<Vec<TokenId>> {
        self.traces.iter().map(|t| t.final_output.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub label: String,
    pub forward_calls: usize,
    pub speedup: f64,
    pub tokens_per_call: f64,
    /// Informational only: depends on the machine.
    pub tokens_per_second: Option<f64>,
    pub exact_match: f64,
    pub fallback_events: usize,
}

/// Compares `method` against `baseline` on the same prompts. Exact match is
/// scored against `references`.
pub fn speedup_report(
    baseline: &RunSet<'_>,
    method: &RunSet<'_>,
    references: &[Vec<TokenId>],
    eot: TokenId,
) -> Result<SpeedupRow> {
    if baseline.prompts != method.prompts || method.traces.len() != method.prompts.len() {
        return Err(Error::Alignment("runs cover different prompt sets".into()));
    }
    let base_calls = baseline.forward_calls();
    let calls = method.forward_calls();
    let emitted: usize = method.traces.iter().map(|t| emitted_tokens(&t.final_output, eot)).sum();
    Ok(SpeedupRow {
        label: method.label.clone(),
        forward_calls: calls,
        speedup: if calls == 0 {
            0.0
        } else {
            base_calls as f64 / calls as f64
        },
        tokens_per_call: if calls == 0 { 0.0 } else { emitted as f64 / calls as f64 },
        tokens_per_second: method.wall_seconds.filter(|&s| s > 0.0).map(|s| emitted as f64 / s),
        exact_match: exact_match_rate(&method.outputs(), references, eot)?,
        fallback_events: method.traces.iter().map(|t| t.fallback_events).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::{Script, ScriptedPredictor};
    use crate::state::{BlockConfig, DecodeState};
    use crate::strategy::{decode, EotpMode, StrategyConfig};
    use crate::vocab::Vocabulary;

    fn run(reference: &[TokenId], gen: usize, block: usize, cfg: StrategyConfig) -> DecodeTrace {
        let vocab = Vocabulary::synthetic(64).unwrap();
        let p = ScriptedPredictor::new(vocab.clone(), Script::all_correct(reference.to_vec()));
        let s = DecodeState::new(&[3], BlockConfig::new(gen, block).unwrap(), &vocab).unwrap();
        decode(s, &p, &cfg).unwrap().1
    }

    fn content(n: usize) -> Vec<TokenId> {
        (0..n as u32).map(|i| 2 + i % 60).collect()
    }

    #[test]
    fn egp_gaps_are_zero() {
        let r = content(64);
        let t = run(&r, 64, 32, StrategyConfig::egp(r.clone(), 64, 1));
        let g = step_gap_analysis(&t).unwrap();
        assert!(g.gaps.iter().all(|&x| x == 0));
        assert_eq!(g.histogram.get(&0), Some(&64));
    }

    #[test]
    fn vanilla_gaps_enumerate_commit_order() {
        let r = content(32);
        let t = run(&r, 32, 32, StrategyConfig::vanilla(1));
        let mut g = step_gap_analysis(&t).unwrap().gaps;
        g.sort_unstable();
        assert_eq!(g, (0..32).collect::<Vec<_>>());
        // same per block when there are several
        let r = content(96);
        let t = run(&r, 96, 32, StrategyConfig::vanilla(1));
        let g = step_gap_analysis(&t).unwrap();
        assert!(g.histogram.values().all(|&c| c == 3));
        assert_eq!(g.histogram.len(), 32);
    }

    #[test]
    fn single_position_block_has_no_gap() {
        let r = content(4);
        let t = run(&r, 4, 1, StrategyConfig::vanilla(1));
        assert_eq!(step_gap_analysis(&t).unwrap().gaps, vec![0; 4]);
    }

    #[test]
    fn never_committed_position_is_an_error() {
        let mut t = run(&content(4), 4, 4, StrategyConfig::vanilla(1));
        t.steps.pop();
        assert!(matches!(step_gap_analysis(&t), Err(Error::Analysis(_))));
    }

    #[test]
    fn block_step_summaries() {
        let r = content(128);
        let v = steps_per_block(&run(&r, 128, 32, StrategyConfig::vanilla(1)));
        assert_eq!(v.per_block, vec![32; 4]);
        assert_eq!((v.median, v.mean), (32.0, 32.0));
        let e = steps_per_block(&run(&r, 128, 32, StrategyConfig::egp(r.clone(), 128, 1)));
        assert_eq!(e.per_block, vec![1; 4]);

        let mut r = content(5);
        r.push(1);
        let cfg = StrategyConfig::egp(r.clone(), 1024, 1).with_eotp(EotpMode::BlockEnd);
        assert_eq!(steps_per_block(&run(&r, 1024, 32, cfg)).per_block.len(), 1);
        assert_eq!(summarize_steps(vec![1, 2, 3, 10]).median, 2.5);
    }

    #[test]
    fn exact_match_rules() {
        assert!(exact_match(&[2, 3, 1, 5], &[2, 3, 1, 5], 1));
        assert!(exact_match(&[2, 3, 1, 5], &[2, 3, 1, 9, 9], 1));
        assert!(!exact_match(&[2, 4, 1], &[2, 3, 1], 1));
        assert!(exact_match(&[2, 3, 1], &[2, 3], 1));
    }

    #[test]
    fn speedups() {
        let r = content(128);
        let prompts = vec![vec![3]];
        let van = [run(&r, 128, 32, StrategyConfig::vanilla(1))];
        let egp = [run(&r, 128, 32, StrategyConfig::egp(r.clone(), 128, 1))];
        let base = RunSet {
            label: "vanilla".into(),
            prompts: &prompts,
            traces: &van,
            wall_seconds: None,
        };
        let method = RunSet {
            label: "egp".into(),
            prompts: &prompts,
            traces: &egp,
            wall_seconds: Some(0.5),
        };
        let refs = vec![r.clone()];
        let same = speedup_report(&base, &base, &refs, 1).unwrap();
        assert_eq!(same.speedup, 1.0);
        let row = speedup_report(&base, &method, &refs, 1).unwrap();
        assert_eq!(row.speedup, 32.0);
        assert_eq!(row.tokens_per_call, 32.0);
        assert_eq!(row.exact_match, 1.0);
        assert_eq!(row.tokens_per_second, Some(256.0));

        let other = vec![vec![4]];
        let bad = RunSet {
            prompts: &other,
            ..method.clone()
        };
        assert!(matches!(
            speedup_report(&base, &bad, &refs, 1),
            Err(Error::Alignment(_))
        ));
    }
}
