//! The toy end-to-end pipeline shared by the command-line tool and the
//! tests: corpus, n-gram predictor, sample collection and benchmarking.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::collect::{collect_samples, vanilla_references, CollectionRun};
use crate::error::{Error, Result};
use crate::filter::FilterModel;
use crate::io::{parse_corpus, Corpus, VocabBuilder};
use crate::metrics::{
    exact_match_rate, speedup_report, step_gap_analysis, summarize_steps, BlockSteps, RunSet, SpeedupRow,
};
use crate::predictor::{train_ngram, MaskPredictor, NGramPredictor, Script, ScriptedPredictor};
use crate::rng;
use crate::state::BlockConfig;
use crate::strategy::{decode_batch, EotpMode, StrategyConfig, StrategyKind};
use crate::trace::DecodeTrace;
use crate::vocab::TokenId;

pub const BUNDLED_TRAIN: &str = include_str!("../data/toy_corpus.txt");
pub const BUNDLED_HELDOUT: &str = include_str!("../data/toy_heldout.txt");

/// Corpus file index of the training lines.
pub const TRAIN: usize = 0;
/// Corpus file index of the held-out lines.
pub const HELDOUT: usize = 1;

/// The bundled toy corpus: training lines, then held-out lines.
pub fn bundled_corpus() -> Result<Corpus> {
    let mut builder = VocabBuilder::new();
    let train = parse_corpus(BUNDLED_TRAIN, Path::new("<bundled>/toy_corpus.txt"), &mut builder)?;
    let heldout = parse_corpus(BUNDLED_HELDOUT, Path::new("<bundled>/toy_heldout.txt"), &mut builder)?;
    Ok(Corpus {
        vocab: builder.build()?,
        files: vec![train, heldout],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NGramOptions {
    pub order: usize,
    pub smoothing: f64,
    /// End-of-text tokens appended to every training line.
    pub pad: usize,
}

impl Default for NGramOptions {
    fn default() -> Self {
        Self {
            order: 3,
            smoothing: 1.0,
            pad: 4,
        }
    }
}

pub fn fit_ngram(corpus: &Corpus, file: usize, opts: &NGramOptions) -> Result<NGramPredictor> {
    train_ngram(
        &corpus.training_sequences(file, opts.pad),
        opts.order,
        opts.smoothing,
        &corpus.vocab,
    )
}

/// Scripted predictor whose references are `gold`; each position becomes
/// correct after a uniform delay in `0..=max_delay` block-local steps.
pub fn scripted_predictor(
    corpus: &Corpus,
    prompts: &[Vec<TokenId>],
    gold: &[Vec<TokenId>],
    gen_length: usize,
    max_delay: usize,
    seed: u64,
) -> ScriptedPredictor {
    let mut scripts = HashMap::new();
    for (i, (p, g)) in prompts.iter().zip(gold).enumerate() {
        let mut r = rng::split(seed, i as u64);
        let mut script = Script::all_correct(g.clone());
        script.first_correct_step = (0..gen_length.max(g.len()))
            .map(|_| r.gen_range(0..=max_delay))
            .collect();
        scripts.insert(p.clone(), script);
    }
    ScriptedPredictor::with_scripts(corpus.vocab.clone(), scripts)
}

/// Vanilla references on `prompts`, then EGP samples against them.
pub fn collect_toy(
    prompts: &[Vec<TokenId>],
    predictor: &dyn MaskPredictor,
    block_cfg: BlockConfig,
) -> Result<CollectionRun> {
    let refs = vanilla_references(prompts, predictor, block_cfg, 1)?;
    collect_samples(prompts, &refs, predictor, block_cfg)
}

/// What to run in a benchmark.
#[derive(Debug, Clone)]
pub struct BenchSpec {
    pub strategies: Vec<StrategyKind>,
    pub tokens_per_step: usize,
    pub tau: f64,
    pub tau_sweep: Vec<f64>,
    pub eotp: EotpMode,
    pub filter: Option<Arc<FilterModel>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyResult {
    pub row: SpeedupRow,
    /// Exact-match rate against the vanilla outputs.
    pub agreement: f64,
    pub step_gaps: BTreeMap<usize, usize>,
    pub block_steps: BlockSteps,
    /// Wall-clock seconds; not written to report files.
    #[serde(skip)]
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau: f64,
    pub forward_calls: usize,
    pub fallback_events: usize,
    pub exact_match: f64,
    /// Calls over the prompts that had no fallback at any swept threshold.
    pub fallback_free_calls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub prompts: usize,
    pub baseline_calls: usize,
    pub results: Vec<StrategyResult>,
    pub sweep: Vec<SweepRow>,
    pub fallback_free_prompts: usize,
}

fn timed_batch(
    prompts: &[Vec<TokenId>],
    predictor: &dyn MaskPredictor,
    block_cfg: BlockConfig,
    strategy_for: impl Fn(usize) -> StrategyConfig + Sync,
) -> Result<(Vec<DecodeTrace>, f64)> {
    let start = Instant::now();
    let traces = decode_batch(prompts, predictor, block_cfg, strategy_for)?
        .into_iter()
        .map(|(_, t)| t)
        .collect();
    Ok((traces, start.elapsed().as_secs_f64()))
}

fn learn2pd_filter(spec: &BenchSpec) -> Result<Arc<FilterModel>> {
    spec.filter
        .clone()
        .ok_or_else(|| Error::Config("learn2pd needs filter weights".into()))
}

/// Runs vanilla `k = 1` as the baseline and every requested strategy on the
/// same prompts. Exact match is scored against `gold`.
pub fn bench(
    prompts: &[Vec<TokenId>],
    gold: &[Vec<TokenId>],
    predictor: &dyn MaskPredictor,
    block_cfg: BlockConfig,
    spec: &BenchSpec,
) -> Result<BenchReport> {
    if prompts.len() != gold.len() {
        return Err(Error::Alignment(format!(
            "{} prompts but {} gold answers",
            prompts.len(),
            gold.len()
        )));
    }
    let eot = predictor.vocabulary().eot_id();
    let (base_traces, base_secs) = timed_batch(prompts, predictor, block_cfg, |_| StrategyConfig::vanilla(1))?;
    let base_outputs: Vec<Vec<TokenId>> = base_traces.iter().map(|t| t.final_output.clone()).collect();
    let baseline = RunSet {
        label: "vanilla".into(),
        prompts,
        traces: &base_traces,
        wall_seconds: Some(base_secs),
    };

    let mut results = Vec::new();
    for &kind in &spec.strategies {
        let (label, (traces, secs)) = match kind {
            StrategyKind::Vanilla => (
                format!("vanilla(k={})", spec.tokens_per_step),
                timed_batch(prompts, predictor, block_cfg, |_| {
                    StrategyConfig::vanilla(spec.tokens_per_step).with_eotp(spec.eotp)
                })?,
            ),
            StrategyKind::Egp => (
                "egp".to_string(),
                timed_batch(prompts, predictor, block_cfg, |i| {
                    StrategyConfig::egp(base_outputs[i].clone(), block_cfg.gen_length, eot).with_eotp(spec.eotp)
                })?,
            ),
            StrategyKind::Learn2pd => {
                let filter = learn2pd_filter(spec)?;
                (
                    format!("learn2pd(tau={})", spec.tau),
                    timed_batch(prompts, predictor, block_cfg, |_| {
                        StrategyConfig::learn2pd(filter.clone(), spec.tau).with_eotp(spec.eotp)
                    })?,
                )
            }
        };
        let label = if spec.eotp == EotpMode::Off {
            label
        } else {
            format!("{label}+eotp")
        };
        let run = RunSet {
            label,
            prompts,
            traces: &traces,
            wall_seconds: Some(secs),
        };
        let row = speedup_report(&baseline, &run, gold, eot)?;
        let agreement = exact_match_rate(&run.outputs(), &base_outputs, eot)?;
        let mut step_gaps = BTreeMap::new();
        let mut per_block = Vec::new();
        for t in &traces {
            for (g, n) in step_gap_analysis(t)?.histogram {
                *step_gaps.entry(g).or_insert(0) += n;
            }
            per_block.extend_from_slice(&t.per_block_steps);
        }
        results.push(StrategyResult {
            row,
            agreement,
            step_gaps,
            block_steps: summarize_steps(per_block),
            wall_seconds: secs,
        });
    }

    let mut sweep = Vec::new();
    let mut fallback_free_prompts = 0;
    if !spec.tau_sweep.is_empty() {
        let filter = learn2pd_filter(spec)?;
        let mut runs = Vec::new();
        for &tau in &spec.tau_sweep {
            let (traces, _) = timed_batch(prompts, predictor, block_cfg, |_| {
                StrategyConfig::learn2pd(filter.clone(), tau).with_eotp(spec.eotp)
            })?;
            runs.push(traces);
        }
        let clean: Vec<bool> = (0..prompts.len())
            .map(|i| runs.iter().all(|r| r[i].fallback_events == 0))
            .collect();
        fallback_free_prompts = clean.iter().filter(|&&c| c).count();
        for (&tau, traces) in spec.tau_sweep.iter().zip(&runs) {
            let outputs: Vec<Vec<TokenId>> = traces.iter().map(|t| t.final_output.clone()).collect();
            sweep.push(SweepRow {
                tau,
                forward_calls: traces.iter().map(|t| t.forward_calls).sum(),
                fallback_events: traces.iter().map(|t| t.fallback_events).sum(),
                exact_match: exact_match_rate(&outputs, gold, eot)?,
                fallback_free_calls: traces
                    .iter()
                    .zip(&clean)
                    .filter(|(_, &c)| c)
                    .map(|(t, _)| t.forward_calls)
                    .sum(),
            });
        }
    }

    Ok(BenchReport {
        prompts: prompts.len(),
        baseline_calls: baseline.forward_calls(),
        results,
        sweep,
        fallback_free_prompts,
    })
}

impl BenchReport {
    /// Plain-text tables. Machine-dependent timings are left out.
    pub fn render(&self) -> String {
        use std::fmt::Write as _;
        let mut s = String::new();
        writeln!(s, "prompts: {}", self.prompts).unwrap();
        writeln!(s, "baseline vanilla(k=1) forward calls: {}", self.baseline_calls).unwrap();
        writeln!(s).unwrap();
        writeln!(
            s,
            "{:<24} {:>10} {:>9} {:>12} {:>12} {:>10} {:>10} {:>14}",
            "strategy", "calls", "speedup", "tokens/call", "exact_match", "agreement", "fallbacks", "steps/block"
        )
        .unwrap();
        for r in &self.results {
            writeln!(
                s,
                "{:<24} {:>10} {:>9.2} {:>12.3} {:>12.3} {:>10.3} {:>10} {:>14.2}",
                r.row.label,
                r.row.forward_calls,
                r.row.speedup,
                r.row.tokens_per_call,
                r.row.exact_match,
                r.agreement,
                r.row.fallback_events,
                r.block_steps.median
            )
            .unwrap();
        }
        if !self.sweep.is_empty() {
            writeln!(s).unwrap();
            writeln!(
                s,
                "threshold sweep ({} fallback-free prompts)",
                self.fallback_free_prompts
            )
            .unwrap();
            writeln!(
                s,
                "{:>6} {:>10} {:>10} {:>12} {:>20}",
                "tau", "calls", "fallbacks", "exact_match", "fallback_free_calls"
            )
            .unwrap();
            for r in &self.sweep {
                writeln!(
                    s,
                    "{:>6.3} {:>10} {:>10} {:>12.3} {:>20}",
                    r.tau, r.forward_calls, r.fallback_events, r.exact_match, r.fallback_free_calls
                )
                .unwrap();
            }
        }
        s
    }

    pub fn speedup_rows(&self) -> Vec<Vec<String>> {
        self.results
            .iter()
            .map(|r| {
                vec![
                    r.row.label.clone(),
                    r.row.forward_calls.to_string(),
                    format!("{:.6}", r.row.speedup),
                    format!("{:.6}", r.row.tokens_per_call),
                    format!("{:.6}", r.row.exact_match),
                    format!("{:.6}", r.agreement),
                    r.row.fallback_events.to_string(),
                    format!("{:.6}", r.block_steps.median),
                    format!("{:.6}", r.block_steps.mean),
                ]
            })
            .collect()
    }

    /// `strategy,gap,count` rows.
    pub fn step_gap_rows(&self) -> Vec<Vec<String>> {
        self.results
            .iter()
            .flat_map(|r| {
                r.step_gaps
                    .iter()
                    .map(move |(g, n)| vec![r.row.label.clone(), g.to_string(), n.to_string()])
            })
            .collect()
    }

    /// `strategy,block,steps` rows over every decoded block.
    pub fn block_step_rows(&self) -> Vec<Vec<String>> {
        self.results
            .iter()
            .flat_map(|r| {
                r.block_steps
                    .per_block
                    .iter()
                    .enumerate()
                    .map(move |(b, n)| vec![r.row.label.clone(), b.to_string(), n.to_string()])
            })
            .collect()
    }

    pub fn sweep_rows(&self) -> Vec<Vec<String>> {
        self.sweep
            .iter()
            .map(|r| {
                vec![
                    format!("{}", r.tau),
                    r.forward_calls.to_string(),
                    r.fallback_events.to_string(),
                    format!("{:.6}", r.exact_match),
                    r.fallback_free_calls.to_string(),
                ]
            })
            .collect()
    }
}

pub const SPEEDUP_COLUMNS: &[&str] = &[
    "strategy",
    "forward_calls",
    "speedup",
    "tokens_per_call",
    "exact_match",
    "agreement",
    "fallback_events",
    "median_steps_per_block",
    "mean_steps_per_block",
];
pub const STEP_GAP_COLUMNS: &[&str] = &["strategy", "gap", "positions"];
pub const BLOCK_STEP_COLUMNS: &[&str] = &["strategy", "block_index", "steps"];
pub const SWEEP_COLUMNS: &[&str] = &[
    "tau",
    "forward_calls",
    "fallback_events",
    "exact_match",
    "fallback_free_calls",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_corpus_shape() {
        let c = bundled_corpus().unwrap();
        assert_eq!(c.entries(TRAIN).len(), 2_640);
        assert_eq!(c.entries(HELDOUT).len(), 100);
        assert!(c.entries(TRAIN).iter().all(|e| !e.continuation.is_empty()));
    }

    #[test]
    fn scripted_all_correct_speedup_is_block_size() {
        let c = bundled_corpus().unwrap();
        let prompts = c.prompts(HELDOUT);
        let gold = c.continuations(HELDOUT);
        let cfg = BlockConfig::new(64, 16).unwrap();
        let p = scripted_predictor(&c, &prompts, &gold, 64, 0, 1);
        let spec = BenchSpec {
            strategies: vec![StrategyKind::Vanilla, StrategyKind::Egp],
            tokens_per_step: 1,
            tau: 0.96,
            tau_sweep: vec![],
            eotp: EotpMode::Off,
            filter: None,
        };
        let r = bench(&prompts, &gold, &p, cfg, &spec).unwrap();
        assert_eq!(r.results[0].row.speedup, 1.0);
        assert_eq!(r.results[1].row.speedup, 16.0);
        assert_eq!(r.results[1].row.exact_match, 1.0);
        assert_eq!(r.results[1].step_gaps.keys().copied().collect::<Vec<_>>(), vec![0]);
        let missing = BenchSpec {
            strategies: vec![StrategyKind::Learn2pd],
            ..spec
        };
        assert!(matches!(
            bench(&prompts, &gold, &p, cfg, &missing),
            Err(Error::Config(_))
        ));
    }
}
