//! Python bindings for `pardec`.
//!
//! Exposes the corpus, the n-gram predictor, block decoding with every
//! policy, sample collection and filter training. Errors surface as
//! `ValueError`.

use std::sync::Arc;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use pardec::io::{load_corpus, load_weights, save_weights};
use pardec::pipeline::{self, NGramOptions};
use pardec::strategy::StrategyKind;
use pardec::{
    BlockConfig, DecodeState, EotpMode, FilterModel, NGramPredictor, StrategyConfig, TokenId, TrainConfig,
    TrainingSample,
};

/// `(conf, labels, mask_active)` for one block.
type Sample = (Vec<f64>, Vec<u8>, Vec<bool>);

fn py_err(e: pardec::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Corpus", module = "pardec_py")]
struct PyCorpus {
    inner: pardec::io::Corpus,
}

#[pymethods]
impl PyCorpus {
    /// The toy corpus shipped with the library: file 0 trains, file 1 is held out.
    #[staticmethod]
    fn bundled() -> PyResult<Self> {
        Ok(Self {
            inner: pipeline::bundled_corpus().map_err(py_err)?,
        })
    }

    /// Loads corpus files into one shared vocabulary.
    #[staticmethod]
    fn load(paths: Vec<String>) -> PyResult<Self> {
        Ok(Self {
            inner: load_corpus(&paths).map_err(py_err)?,
        })
    }

    #[getter]
    fn vocab_size(&self) -> u32 {
        self.inner.vocab.size()
    }

    #[getter]
    fn eot_id(&self) -> TokenId {
        self.inner.vocab.eot_id()
    }

    #[getter]
    fn num_files(&self) -> usize {
        self.inner.files.len()
    }

    fn encode(&self, text: &str) -> PyResult<Vec<TokenId>> {
        self.inner.vocab.encode(text).map_err(py_err)
    }

    fn decode(&self, ids: Vec<TokenId>) -> String {
        self.inner.vocab.decode(&ids)
    }

    fn prompts(&self, file: usize) -> PyResult<Vec<Vec<TokenId>>> {
        self.check_file(file)?;
        Ok(self.inner.prompts(file))
    }

    fn continuations(&self, file: usize) -> PyResult<Vec<Vec<TokenId>>> {
        self.check_file(file)?;
        Ok(self.inner.continuations(file))
    }
}

impl PyCorpus {
    fn check_file(&self, file: usize) -> PyResult<()> {
        if file >= self.inner.files.len() {
            return Err(PyValueError::new_err(format!(
                "corpus has {} files, asked for {file}",
                self.inner.files.len()
            )));
        }
        Ok(())
    }
}

#[pyclass(name = "NGram", module = "pardec_py")]
struct PyNGram {
    inner: Arc<NGramPredictor>,
}

#[pymethods]
impl PyNGram {
    #[new]
    #[pyo3(signature = (corpus, file = 0, order = 3, smoothing = 1.0, pad = 4))]
    fn new(corpus: &PyCorpus, file: usize, order: usize, smoothing: f64, pad: usize) -> PyResult<Self> {
        corpus.check_file(file)?;
        let opts = NGramOptions { order, smoothing, pad };
        Ok(Self {
            inner: Arc::new(pipeline::fit_ngram(&corpus.inner, file, &opts).map_err(py_err)?),
        })
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    /// Next-token distribution after `context`.
    fn distribution(&self, context: Vec<TokenId>) -> Vec<f64> {
        self.inner.distribution(&context)
    }
}

#[pyclass(name = "Filter", module = "pardec_py")]
struct PyFilter {
    inner: Arc<FilterModel>,
    fingerprint: String,
}

#[pymethods]
impl PyFilter {
    /// Trains a filter on `(conf, labels, mask_active)` triples.
    #[staticmethod]
    #[pyo3(signature = (samples, epochs = 5000, lr = 1e-3, layers = 2, seed = 0))]
    fn train(
        py: Python<'_>,
        samples: Vec<Sample>,
        epochs: usize,
        lr: f64,
        layers: usize,
        seed: u64,
    ) -> PyResult<(Self, Vec<f64>)> {
        let data: Vec<TrainingSample> = samples
            .into_iter()
            .map(|(conf, labels, mask_active)| TrainingSample {
                conf,
                labels,
                mask_active,
            })
            .collect();
        let cfg = TrainConfig {
            epochs,
            learning_rate: lr,
            layers,
            seed,
            ..TrainConfig::default()
        };
        let (model, history) = py
            .detach(|| pardec::filter::train_filter(&data, &cfg))
            .map_err(py_err)?;
        let losses = history.iter().map(|e| e.train).collect();
        Ok((
            Self {
                inner: Arc::new(model),
                fingerprint: cfg.fingerprint(),
            },
            losses,
        ))
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let file = load_weights(path.as_ref()).map_err(py_err)?;
        Ok(Self {
            inner: Arc::new(file.model),
            fingerprint: file.fingerprint,
        })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        save_weights(path.as_ref(), &self.inner, &self.fingerprint).map_err(py_err)
    }

    #[getter]
    fn num_params(&self) -> usize {
        self.inner.num_params()
    }

    #[getter]
    fn num_layers(&self) -> usize {
        self.inner.layers().len()
    }

    /// Keep logits for one block confidence vector.
    fn forward(&self, conf: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.forward(&conf).map_err(py_err)
    }
}

/// Result of one decode run.
#[pyclass(name = "DecodeResult", module = "pardec_py", get_all)]
struct PyDecodeResult {
    output: Vec<TokenId>,
    forward_calls: usize,
    per_block_steps: Vec<usize>,
    fallback_events: usize,
}

fn eotp_mode(name: &str) -> PyResult<EotpMode> {
    match name {
        "off" => Ok(EotpMode::Off),
        "block" => Ok(EotpMode::BlockEnd),
        "step" => Ok(EotpMode::PerStep),
        other => Err(PyValueError::new_err(format!(
            "unknown eotp mode {other:?}, use off, block or step"
        ))),
    }
}

#[pyfunction]
#[pyo3(signature = (
    predictor, prompt, strategy = "vanilla", gen_length = 128, block_size = 32, k = 1, tau = 0.96,
    filter = None, reference = None, eotp = "off"
))]
#[allow(clippy::too_many_arguments)]
fn decode(
    py: Python<'_>,
    predictor: &PyNGram,
    prompt: Vec<TokenId>,
    strategy: &str,
    gen_length: usize,
    block_size: usize,
    k: usize,
    tau: f64,
    filter: Option<&PyFilter>,
    reference: Option<Vec<TokenId>>,
    eotp: &str,
) -> PyResult<PyDecodeResult> {
    let kind: StrategyKind = strategy.parse().map_err(py_err)?;
    let eot = pardec::MaskPredictor::vocabulary(&*predictor.inner).eot_id();
    let cfg = match kind {
        StrategyKind::Vanilla => StrategyConfig::vanilla(k),
        StrategyKind::Egp => {
            let r = reference.ok_or_else(|| PyValueError::new_err("egp needs a reference"))?;
            StrategyConfig::egp(r, gen_length, eot)
        }
        StrategyKind::Learn2pd => {
            let f = filter.ok_or_else(|| PyValueError::new_err("learn2pd needs a filter"))?;
            StrategyConfig::learn2pd(f.inner.clone(), tau)
        }
    }
    .with_eotp(eotp_mode(eotp)?);
    let block_cfg = BlockConfig::new(gen_length, block_size).map_err(py_err)?;
    let model = predictor.inner.clone();
    let (output, trace) = py
        .detach(|| {
            let state = DecodeState::new(&prompt, block_cfg, pardec::MaskPredictor::vocabulary(&*model))?;
            pardec::decode(state, &*model, &cfg)
        })
        .map_err(py_err)?;
    Ok(PyDecodeResult {
        output,
        forward_calls: trace.forward_calls,
        per_block_steps: trace.per_block_steps,
        fallback_events: trace.fallback_events,
    })
}

/// Oracle samples from vanilla references: `(conf, labels, mask_active)` triples.
#[pyfunction]
#[pyo3(signature = (predictor, prompts, gen_length = 128, block_size = 32))]
fn collect(
    py: Python<'_>,
    predictor: &PyNGram,
    prompts: Vec<Vec<TokenId>>,
    gen_length: usize,
    block_size: usize,
) -> PyResult<Vec<Sample>> {
    let block_cfg = BlockConfig::new(gen_length, block_size).map_err(py_err)?;
    let model = predictor.inner.clone();
    let run = py
        .detach(|| pipeline::collect_toy(&prompts, &*model, block_cfg))
        .map_err(py_err)?;
    Ok(run
        .samples
        .into_iter()
        .map(|s| (s.conf, s.labels, s.mask_active))
        .collect())
}

#[pymodule]
fn pardec_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCorpus>()?;
    m.add_class::<PyNGram>()?;
    m.add_class::<PyFilter>()?;
    m.add_class::<PyDecodeResult>()?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(collect, m)?)?;
    Ok(())
}
