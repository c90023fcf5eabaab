use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use pardec::filter::{train_filter_with, Activation, TrainConfig};
use pardec::io::{
    load_corpus, load_weights, read_dataset, save_weights, write_csv, write_dataset, write_loss_curve, write_trace,
    Corpus, Header, REPORT_FORMAT,
};
use pardec::metrics::truncate_at_eot;
use pardec::pipeline::{
    bench, bundled_corpus, collect_toy, fit_ngram, scripted_predictor, BenchSpec, NGramOptions, BLOCK_STEP_COLUMNS,
    HELDOUT, SPEEDUP_COLUMNS, STEP_GAP_COLUMNS, SWEEP_COLUMNS, TRAIN,
};
use pardec::predictor::MaskPredictor;
use pardec::strategy::{decode, EotpMode, StrategyConfig, StrategyKind, DEFAULT_TAU};
use pardec::{toy, BlockConfig, DecodeState, Error, FilterModel, Result};

#[derive(Parser)]
#[command(
    name = "pardec",
    version,
    about = "Masked-diffusion block decoding with a learned unmask filter"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the bundled toy corpus files.
    GenCorpus {
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run the EGP oracle over the training prompts and save filter samples.
    Collect {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a filter on a collected dataset.
    TrainFilter {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to the weights path with a `.loss.csv` suffix.
        #[arg(long)]
        loss_curve: Option<PathBuf>,
        #[command(flatten)]
        train: TrainFlags,
    },
    /// Decode one prompt.
    Decode {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        prompt: String,
        #[command(flatten)]
        strategy: StrategyFlags,
        /// Reference continuation for the EGP oracle.
        #[arg(long)]
        reference: Option<String>,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Compare strategies against vanilla decoding on the held-out prompts.
    Bench(BenchArgs),
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated list from vanilla, egp, learn2pd.
    #[arg(long)]
    strategies: Option<String>,
    /// Comma-separated seeds; one report section each.
    #[arg(long)]
    seeds: Option<String>,
    /// `lo:hi[:step]` (descending from hi) or a comma-separated list.
    #[arg(long)]
    tau_sweep: Option<String>,
    /// ngram or scripted.
    #[arg(long)]
    predictor: Option<String>,
    /// Largest per-position delay of the scripted predictor.
    #[arg(long)]
    script_delay: Option<usize>,
    #[command(flatten)]
    strategy: StrategyFlags,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct Common {
    /// TOML file with defaults for any flag (underscored names).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training corpus; the bundled toy corpus when omitted.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Held-out corpus for bench.
    #[arg(long)]
    heldout: Option<PathBuf>,
    #[arg(long)]
    gen_length: Option<usize>,
    #[arg(long)]
    block_size: Option<usize>,
    #[arg(long)]
    max_steps_per_block: Option<usize>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    smoothing: Option<f64>,
    #[arg(long)]
    pad: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct StrategyFlags {
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    eotp: bool,
    #[arg(long)]
    eotp_per_step: bool,
    #[arg(long)]
    weights: Option<PathBuf>,
}

#[derive(Args)]
struct TrainFlags {
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    activation: Option<String>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    validation_fraction: Option<f64>,
}

/// Values a config file may set.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    corpus: Option<PathBuf>,
    heldout: Option<PathBuf>,
    gen_length: Option<usize>,
    block_size: Option<usize>,
    max_steps_per_block: Option<usize>,
    order: Option<usize>,
    smoothing: Option<f64>,
    pad: Option<usize>,
    seed: Option<u64>,
    jobs: Option<usize>,
    strategy: Option<String>,
    k: Option<usize>,
    tau: Option<f64>,
    eotp: Option<bool>,
    eotp_per_step: Option<bool>,
    weights: Option<PathBuf>,
    layers: Option<usize>,
    epochs: Option<usize>,
    lr: Option<f64>,
    hidden: Option<usize>,
    activation: Option<String>,
    batch_size: Option<usize>,
    weight_decay: Option<f64>,
    validation_fraction: Option<f64>,
    strategies: Option<String>,
    seeds: Option<String>,
    tau_sweep: Option<String>,
    predictor: Option<String>,
    script_delay: Option<usize>,
}

/// Flag, else config file, else default.
fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: e.to_string(),
    })
}

/// Effective shared settings, echoed into output headers.
#[derive(Debug, Serialize)]
struct Setup {
    corpus: String,
    heldout: Option<String>,
    vocab_size: u32,
    gen_length: usize,
    block_size: usize,
    max_steps_per_block: usize,
    ngram: NGramOptions,
    seed: u64,
}

struct Loaded {
    setup: Setup,
    corpus: Corpus,
    block_cfg: BlockConfig,
}

impl Loaded {
    fn eval_file(&self) -> usize {
        if self.corpus.files.len() > HELDOUT {
            HELDOUT
        } else {
            TRAIN
        }
    }
}

fn init_pool(common: &Common, file: &FileConfig) -> Result<()> {
    if let Some(jobs) = common.jobs.or(file.jobs) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn load(common: &Common, file: &FileConfig) -> Result<Loaded> {
    init_pool(common, file)?;
    let corpus_path = common.corpus.clone().or(file.corpus.clone());
    let heldout_path = common.heldout.clone().or(file.heldout.clone());
    let (corpus, corpus_name, heldout_name) = match (&corpus_path, &heldout_path) {
        (None, None) => (
            bundled_corpus()?,
            "<bundled>".to_string(),
            Some("<bundled>".to_string()),
        ),
        (Some(c), None) => (load_corpus(&[c])?, c.display().to_string(), None),
        (Some(c), Some(h)) => (
            load_corpus(&[c, h])?,
            c.display().to_string(),
            Some(h.display().to_string()),
        ),
        (None, Some(_)) => return Err(Error::Config("--heldout needs --corpus".into())),
    };
    let defaults = BlockConfig::default();
    let gen_length = pick(common.gen_length, file.gen_length, defaults.gen_length);
    let block_size = pick(common.block_size, file.block_size, defaults.block_size);
    let cap = pick(common.max_steps_per_block, file.max_steps_per_block, 4 * block_size);
    let block_cfg = BlockConfig::with_cap(gen_length, block_size, cap)?;
    let nd = NGramOptions::default();
    let ngram = NGramOptions {
        order: pick(common.order, file.order, nd.order),
        smoothing: pick(common.smoothing, file.smoothing, nd.smoothing),
        pad: pick(common.pad, file.pad, nd.pad),
    };
    Ok(Loaded {
        setup: Setup {
            corpus: corpus_name,
            heldout: heldout_name,
            vocab_size: corpus.vocab.size(),
            gen_length,
            block_size,
            max_steps_per_block: cap,
            ngram,
            seed: pick(common.seed, file.seed, 0),
        },
        corpus,
        block_cfg,
    })
}

#[derive(Debug, Serialize)]
struct StrategySetup {
    strategy: StrategyKind,
    k: usize,
    tau: f64,
    eotp: EotpMode,
    weights: Option<String>,
}

fn strategy_setup(flags: &StrategyFlags, file: &FileConfig, default_kind: StrategyKind) -> Result<StrategySetup> {
    let strategy = match flags.strategy.clone().or(file.strategy.clone()) {
        Some(s) => s.parse()?,
        None => default_kind,
    };
    let eotp = if flags.eotp_per_step || (!flags.eotp && file.eotp_per_step == Some(true)) {
        EotpMode::PerStep
    } else if flags.eotp || file.eotp == Some(true) {
        EotpMode::BlockEnd
    } else {
        EotpMode::Off
    };
    Ok(StrategySetup {
        strategy,
        k: pick(flags.k, file.k, 1),
        tau: pick(flags.tau, file.tau, DEFAULT_TAU),
        eotp,
        weights: flags
            .weights
            .clone()
            .or(file.weights.clone())
            .map(|p| p.display().to_string()),
    })
}

fn load_filter(setup: &StrategySetup, block_size: usize) -> Result<Option<Arc<FilterModel>>> {
    let Some(path) = &setup.weights else {
        return Ok(None);
    };
    let model = load_weights(Path::new(path))?.model;
    if model.input_width() != block_size {
        return Err(Error::Config(format!(
            "weights expect block size {}, not {block_size}",
            model.input_width()
        )));
    }
    Ok(Some(Arc::new(model)))
}

fn header_config<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("config serializes")
}

fn cmd_gen_corpus(out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for (name, text) in [
        ("toy_corpus.txt", toy::train_corpus_text()),
        ("toy_heldout.txt", toy::heldout_corpus_text()),
    ] {
        let path = out_dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_collect(common: &Common, out: &Path) -> Result<()> {
    let file = load_file_config(common.config.as_deref())?;
    let l = load(common, &file)?;
    let predictor = fit_ngram(&l.corpus, TRAIN, &l.setup.ngram)?;
    let prompts = l.corpus.prompts(TRAIN);
    let run = collect_toy(&prompts, &predictor, l.block_cfg)?;
    write_dataset(out, &run, header_config(&l.setup))?;
    println!(
        "collected {} samples from {} prompts ({} forward calls)",
        run.samples.len(),
        prompts.len(),
        run.forward_calls
    );
    Ok(())
}

#[derive(Serialize)]
struct TrainSetup {
    dataset: String,
    train: TrainConfig,
    collection: serde_json::Value,
}

fn cmd_train_filter(
    common: &Common,
    dataset: &Path,
    out: &Path,
    loss_curve: Option<&Path>,
    flags: &TrainFlags,
) -> Result<()> {
    let file = load_file_config(common.config.as_deref())?;
    init_pool(common, &file)?;
    let d = TrainConfig::default();
    let activation: Activation = match flags.activation.clone().or(file.activation.clone()) {
        Some(a) => a.parse()?,
        None => d.activation,
    };
    let cfg = TrainConfig {
        learning_rate: pick(flags.lr, file.lr, d.learning_rate),
        epochs: pick(flags.epochs, file.epochs, d.epochs),
        weight_decay: pick(flags.weight_decay, file.weight_decay, d.weight_decay),
        batch_size: pick(flags.batch_size, file.batch_size, d.batch_size),
        validation_fraction: pick(
            flags.validation_fraction,
            file.validation_fraction,
            d.validation_fraction,
        ),
        seed: pick(common.seed, file.seed, d.seed),
        layers: pick(flags.layers, file.layers, d.layers),
        hidden: flags.hidden.or(file.hidden),
        activation,
        ..d
    };
    let data = read_dataset(dataset)?;
    if let Some(bs) = common.block_size.or(file.block_size) {
        if data.width() != Some(bs) {
            return Err(Error::Dataset(format!(
                "dataset width {:?} differs from block size {bs}",
                data.width()
            )));
        }
    }
    let start = Instant::now();
    let every = (cfg.epochs / 10).max(1);
    let (model, history) = train_filter_with(&data.samples, &cfg, |e| {
        if e.epoch % every == 0 {
            eprintln!(
                "epoch {:>6}  train {:.6}  validation {}",
                e.epoch,
                e.train,
                e.validation.map_or("-".into(), |v| format!("{v:.6}"))
            );
        }
    })?;
    let setup = TrainSetup {
        dataset: dataset.display().to_string(),
        train: cfg.clone(),
        collection: data.header.config.clone(),
    };
    save_weights(out, &model, &cfg.fingerprint())?;
    let curve = match loss_curve {
        Some(p) => p.to_path_buf(),
        None => {
            let mut s = out.as_os_str().to_owned();
            s.push(".loss.csv");
            PathBuf::from(s)
        }
    };
    write_loss_curve(&curve, &history, header_config(&setup))?;
    println!(
        "trained {} parameters on {} samples in {:.1}s; final train loss {:.6}",
        model.num_params(),
        data.samples.len(),
        start.elapsed().as_secs_f64(),
        history.last().map_or(f64::NAN, |e| e.train)
    );
    println!("wrote {} and {}", out.display(), curve.display());
    Ok(())
}

#[derive(Serialize)]
struct DecodeSetup<'a> {
    #[serde(flatten)]
    setup: &'a Setup,
    #[serde(flatten)]
    strategy: &'a StrategySetup,
    prompt: &'a str,
    reference: Option<&'a str>,
}

fn cmd_decode(
    common: &Common,
    prompt: &str,
    flags: &StrategyFlags,
    reference: Option<&str>,
    trace_path: Option<&Path>,
) -> Result<()> {
    let file = load_file_config(common.config.as_deref())?;
    let l = load(common, &file)?;
    let st = strategy_setup(flags, &file, StrategyKind::Vanilla)?;
    let vocab = &l.corpus.vocab;
    let predictor = fit_ngram(&l.corpus, TRAIN, &l.setup.ngram)?;
    let cfg = match st.strategy {
        StrategyKind::Vanilla => StrategyConfig::vanilla(st.k),
        StrategyKind::Egp => {
            let r = reference.ok_or_else(|| Error::Config("egp needs --reference".into()))?;
            StrategyConfig::egp(vocab.encode(r)?, l.block_cfg.gen_length, vocab.eot_id())
        }
        StrategyKind::Learn2pd => {
            let filter = load_filter(&st, l.block_cfg.block_size)?
                .ok_or_else(|| Error::Config("learn2pd needs --weights".into()))?;
            StrategyConfig::learn2pd(filter, st.tau)
        }
    }
    .with_eotp(st.eotp);
    let state = DecodeState::new(&vocab.encode(prompt)?, l.block_cfg, vocab)?;
    let (output, trace) = decode(state, &predictor, &cfg)?;
    println!("{}", vocab.decode(truncate_at_eot(&output, vocab.eot_id())));
    println!(
        "forward calls: {}  steps per block: {:?}  fallbacks: {}",
        trace.forward_calls, trace.per_block_steps, trace.fallback_events
    );
    if let Some(path) = trace_path {
        let setup = DecodeSetup {
            setup: &l.setup,
            strategy: &st,
            prompt,
            reference,
        };
        write_trace(path, &[trace], header_config(&setup))?;
    }
    Ok(())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| x.trim().parse().map_err(|_| Error::Config(format!("bad {what} {x:?}"))))
        .collect()
}

/// `lo:hi[:step]` runs from `hi` down to `lo`; anything else is a list.
fn parse_sweep(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 1 {
        return parse_list(s, "threshold");
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse().map_err(|_| Error::Config(format!("bad sweep {s:?}"))))
        .collect::<Result<_>>()?;
    let (lo, hi, step) = match nums[..] {
        [lo, hi] => (lo, hi, 0.01),
        [lo, hi, step] => (lo, hi, step),
        _ => return Err(Error::Config(format!("bad sweep {s:?}"))),
    };
    if !(step > 0.0 && lo <= hi) {
        return Err(Error::Config(format!("bad sweep {s:?}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| ((hi - i as f64 * step) * 1e9).round() / 1e9).collect())
}

#[derive(Serialize)]
struct BenchSetup<'a> {
    #[serde(flatten)]
    setup: &'a Setup,
    #[serde(flatten)]
    strategy: &'a StrategySetup,
    strategies: Vec<StrategyKind>,
    seeds: &'a [u64],
    tau_sweep: &'a [f64],
    predictor: &'a str,
    script_delay: usize,
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let common = &args.common;
    let flags = &args.strategy;
    let out_dir = args.out_dir.as_path();
    let file = load_file_config(common.config.as_deref())?;
    let l = load(common, &file)?;
    let st = strategy_setup(flags, &file, StrategyKind::Vanilla)?;
    let filter = load_filter(&st, l.block_cfg.block_size)?;
    let strategies: Vec<StrategyKind> = match args.strategies.clone().or(file.strategies.clone()) {
        Some(s) => parse_list(&s, "strategy")?,
        None if filter.is_some() => vec![StrategyKind::Vanilla, StrategyKind::Egp, StrategyKind::Learn2pd],
        None => vec![StrategyKind::Vanilla, StrategyKind::Egp],
    };
    let seeds: Vec<u64> = match args.seeds.clone().or(file.seeds.clone()) {
        Some(s) => parse_list(&s, "seed")?,
        None => vec![l.setup.seed],
    };
    let sweep = match args.tau_sweep.clone().or(file.tau_sweep.clone()) {
        Some(s) => parse_sweep(&s)?,
        None => vec![],
    };
    let kind = args
        .predictor
        .clone()
        .or(file.predictor.clone())
        .unwrap_or_else(|| "ngram".into());
    let delay = pick(args.script_delay, file.script_delay, 0);
    let spec = BenchSpec {
        strategies: strategies.clone(),
        tokens_per_step: st.k,
        tau: st.tau,
        tau_sweep: sweep.clone(),
        eotp: st.eotp,
        filter,
    };
    let eval = l.eval_file();
    let prompts = l.corpus.prompts(eval);
    let gold = l.corpus.continuations(eval);

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let setup = BenchSetup {
        setup: &l.setup,
        strategy: &st,
        strategies,
        seeds: &seeds,
        tau_sweep: &sweep,
        predictor: &kind,
        script_delay: delay,
    };
    let header = Header::new(REPORT_FORMAT, header_config(&setup));
    let mut text = format!("# {}\n", serde_json::to_string(&header).expect("header serializes"));
    let (mut speed, mut gaps, mut blocks, mut sweeps) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let ngram = match kind.as_str() {
        "ngram" => Some(fit_ngram(&l.corpus, TRAIN, &l.setup.ngram)?),
        "scripted" => None,
        other => return Err(Error::Config(format!("unknown predictor {other:?}"))),
    };
    for &seed in &seeds {
        let scripted;
        let predictor: &dyn MaskPredictor = match &ngram {
            Some(p) => p,
            None => {
                scripted = scripted_predictor(&l.corpus, &prompts, &gold, l.block_cfg.gen_length, delay, seed);
                &scripted
            }
        };
        let report = bench(&prompts, &gold, predictor, l.block_cfg, &spec)?;
        text.push_str(&format!("\n== seed {seed} ==\n"));
        text.push_str(&report.render());
        let with_seed = |rows: Vec<Vec<String>>| {
            rows.into_iter().map(|mut r| {
                r.insert(0, seed.to_string());
                r
            })
        };
        speed.extend(with_seed(report.speedup_rows()));
        gaps.extend(with_seed(report.step_gap_rows()));
        blocks.extend(with_seed(report.block_step_rows()));
        sweeps.extend(with_seed(report.sweep_rows()));
        for r in &report.results {
            let tps = r.row.tokens_per_second.unwrap_or(0.0);
            println!(
                "seed {seed} {:<24} calls {:>7} speedup {:>6.2} exact {:.3} ({:.0} tokens/s, {:.3}s)",
                r.row.label, r.row.forward_calls, r.row.speedup, r.row.exact_match, tps, r.wall_seconds
            );
        }
    }
    let seeded = |cols: &[&'static str]| {
        let mut c = vec!["seed"];
        c.extend_from_slice(cols);
        c
    };
    let report_path = out_dir.join("report.txt");
    fs::write(&report_path, &text).map_err(|e| Error::io(&report_path, e))?;
    write_csv(&out_dir.join("speedup.csv"), &header, &seeded(SPEEDUP_COLUMNS), &speed)?;
    write_csv(
        &out_dir.join("step_gaps.csv"),
        &header,
        &seeded(STEP_GAP_COLUMNS),
        &gaps,
    )?;
    write_csv(
        &out_dir.join("steps_per_block.csv"),
        &header,
        &seeded(BLOCK_STEP_COLUMNS),
        &blocks,
    )?;
    if !sweep.is_empty() {
        write_csv(&out_dir.join("tau_sweep.csv"), &header, &seeded(SWEEP_COLUMNS), &sweeps)?;
    }
    print!("{}", &text[text.find('\n').map_or(0, |i| i + 1)..]);
    println!("wrote reports to {}", out_dir.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenCorpus { out_dir } => cmd_gen_corpus(&out_dir),
        Command::Collect { common, out } => cmd_collect(&common, &out),
        Command::TrainFilter {
            common,
            dataset,
            out,
            loss_curve,
            train,
        } => cmd_train_filter(&common, &dataset, &out, loss_curve.as_deref(), &train),
        Command::Decode {
            common,
            prompt,
            strategy,
            reference,
            trace,
        } => cmd_decode(&common, &prompt, &strategy, reference.as_deref(), trace.as_deref()),
        Command::Bench(args) => cmd_bench(&args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing() {
        assert_eq!(parse_sweep("0.90:0.99:0.03").unwrap(), vec![0.99, 0.96, 0.93, 0.90]);
        assert_eq!(parse_sweep("0.90:0.99").unwrap().len(), 10);
        assert_eq!(parse_sweep("0.5,0.7").unwrap(), vec![0.5, 0.7]);
        assert!(parse_sweep("0.9:0.5").is_err());
    }

    #[test]
    fn precedence() {
        assert_eq!(pick(Some(1), Some(2), 3), 1);
        assert_eq!(pick(None, Some(2), 3), 2);
        assert_eq!(pick(None, None, 3), 3);
    }

    #[test]
    fn cli_definition_is_valid() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
