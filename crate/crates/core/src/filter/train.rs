use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

use super::adamw::{adamw_step, AdamWConfig, AdamWState};
use super::model::{batch_gradients, layer_widths, Activation, FilterModel};

/// Block confidence vector and the per-position keep labels observed for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub conf: Vec<f64>,
    /// 1 = the prediction matched the reference (unmask), 0 = remask.
    pub labels: Vec<u8>,
    /// Position was still masked when the sample was taken.
    pub mask_active: Vec<bool>,
}

impl TrainingSample {
    pub fn width(&self) -> usize {
        self.conf.len()
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.conf.len();
        if self.labels.len() != w || self.mask_active.len() != w {
            return Err(Error::Dataset(format!(
                "sample arrays have widths {}, {}, {}",
                w,
                self.labels.len(),
                self.mask_active.len()
            )));
        }
        if self.conf.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return Err(Error::Dataset("confidence outside [0, 1]".into()));
        }
        if self.labels.iter().any(|&y| y > 1) {
            return Err(Error::Dataset("labels must be 0 or 1".into()));
        }
        Ok(())
    }

    pub fn label_f64(&self) -> Vec<f64> {
        self.labels.iter().map(|&y| y as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub validation_fraction: f64,
    pub seed: u64,
    /// Number of linear layers.
    pub layers: usize,
    /// Hidden width; `None` uses the sample width.
    pub hidden: Option<usize>,
    pub activation: Activation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let opt = AdamWConfig::default();
        Self {
            learning_rate: opt.learning_rate,
            epochs: 5_000,
            beta1: opt.beta1,
            beta2: opt.beta2,
            eps: opt.eps,
            weight_decay: opt.weight_decay,
            batch_size: 64,
            validation_fraction: 0.1,
            seed: 0,
            layers: 2,
            hidden: None,
            activation: Activation::Relu,
        }
    }
}

impl TrainConfig {
    pub fn optimizer(&self) -> AdamWConfig {
        AdamWConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
            weight_decay: self.weight_decay,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("invalid learning rate {}", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config("validation fraction must be in [0, 1)".into()));
        }
        if self.layers == 0 {
            return Err(Error::Config("filter needs at least one layer".into()));
        }
        Ok(())
    }

    pub fn widths(&self, block_size: usize) -> Vec<usize> {
        layer_widths(block_size, self.hidden.unwrap_or(block_size), self.layers)
    }

    /// Stable text identifying this configuration, stored with trained weights.
    pub fn fingerprint(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train: f64,
    pub validation: Option<f64>,
}

pub type LossHistory = Vec<EpochLoss>;

struct Prepared<'a> {
    conf: &'a [f64],
    labels: Vec<f64>,
    active: &'a [bool],
}

fn dataset_width(dataset: &[TrainingSample]) -> Result<usize> {
    let first = dataset.first().ok_or_else(|| Error::Dataset("empty dataset".into()))?;
    let w = first.width();
    for (i, s) in dataset.iter().enumerate() {
        s.validate()?;
        if s.width() != w {
            return Err(Error::Dataset(format!(
                "sample {i} has width {}, expected {w}",
                s.width()
            )));
        }
    }
    Ok(w)
}

fn mean_loss(model: &FilterModel, samples: &[Prepared<'_>]) -> Option<f64> {
    // fixed chunking keeps the reduction order independent of thread count
    let partial: Vec<(f64, usize)> = samples
        .par_chunks(256)
        .map(|chunk| {
            let mut sum = 0.0;
            let mut count = 0;
            for s in chunk {
                let z = model.forward(s.conf).expect("width checked");
                for ((&z, &y), &a) in z.iter().zip(&s.labels).zip(s.active) {
                    if a {
                        sum += z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
                        count += 1;
                    }
                }
            }
            (sum, count)
        })
        .collect();
    let (sum, count) = partial.into_iter().fold((0.0, 0), |(s, c), (s2, c2)| (s + s2, c + c2));
    (count > 0).then(|| sum / count as f64)
}

/// Mini-batch AdamW training of a fresh filter on `dataset`.
///
/// A fraction of the samples is held out for validation. Losses average over
/// the masked positions of a batch. The returned weights are rounded to `f32`.
pub fn train_filter(dataset: &[TrainingSample], cfg: &TrainConfig) -> Result<(FilterModel, LossHistory)> {
    train_filter_with(dataset, cfg, |_| {})
}

/// [`train_filter`] with a callback invoked after every epoch.
pub fn train_filter_with<F>(
    dataset: &[TrainingSample],
    cfg: &TrainConfig,
    mut on_epoch: F,
) -> Result<(FilterModel, LossHistory)>
where
    F: FnMut(&EpochLoss),
{
    cfg.validate()?;
    let width = dataset_width(dataset)?;
    let mut rng = rng::seeded(cfg.seed);

    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((dataset.len() as f64) * cfg.validation_fraction).floor() as usize;
    let n_val = n_val.min(dataset.len() - 1);
    let prepare = |i: &usize| {
        let s = &dataset[*i];
        Prepared {
            conf: &s.conf,
            labels: s.label_f64(),
            active: &s.mask_active,
        }
    };
    let val: Vec<Prepared<'_>> = order[..n_val].iter().map(prepare).collect();
    let train: Vec<Prepared<'_>> = order[n_val..].iter().map(prepare).collect();

    let mut model = FilterModel::random(&cfg.widths(width), cfg.activation, &mut rng)?;
    let opt = cfg.optimizer();
    let mut state = AdamWState::new(&model);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut idx: Vec<usize> = (0..train.len()).collect();

    for epoch in 0..cfg.epochs {
        idx.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;
        for batch in idx.chunks(cfg.batch_size) {
            let items = batch
                .iter()
                .map(|&i| (train[i].conf, train[i].labels.as_slice(), train[i].active));
            let active: usize = batch
                .iter()
                .map(|&i| train[i].active.iter().filter(|&&a| a).count())
                .sum();
            let (loss, grads) = match batch_gradients(&model, items) {
                Ok(r) => r,
                Err(Error::EmptyBatch) => continue,
                Err(e) => return Err(e),
            };
            adamw_step(&mut model, &grads, &mut state, &opt)?;
            loss_sum += loss * active as f64;
            loss_count += active;
        }
        let entry = EpochLoss {
            epoch: epoch + 1,
            train: if loss_count > 0 {
                loss_sum / loss_count as f64
            } else {
                f64::NAN
            },
            validation: mean_loss(&model, &val),
        };
        on_epoch(&entry);
        history.push(entry);
    }
    model.round_to_f32();
    Ok((model, history))
}

/// Fraction of active positions where `p > tau` agrees with the label.
pub fn label_accuracy(model: &FilterModel, samples: &[TrainingSample], tau: f64) -> Result<f64> {
    let mut right = 0usize;
    let mut total = 0usize;
    for s in samples {
        let p = model.probabilities(&s.conf)?;
        for ((&p, &y), &a) in p.iter().zip(&s.labels).zip(&s.mask_active) {
            if a {
                total += 1;
                if (p > tau) == (y == 1) {
                    right += 1;
                }
            }
        }
    }
    if total == 0 {
        return Err(Error::EmptyBatch);
    }
    Ok(right as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn threshold_dataset(n: usize, width: usize, seed: u64) -> Vec<TrainingSample> {
        use rand::Rng;
        let mut r = rng::seeded(seed);
        (0..n)
            .map(|_| {
                let conf: Vec<f64> = (0..width).map(|_| r.gen::<f64>()).collect();
                let labels = conf.iter().map(|&c| u8::from(c > 0.8)).collect();
                TrainingSample {
                    conf,
                    labels,
                    mask_active: vec![true; width],
                }
            })
            .collect()
    }

    #[test]
    fn rejects_inconsistent_widths() {
        let mut data = threshold_dataset(4, 3, 1);
        data[2] = threshold_dataset(1, 4, 2).remove(0);
        assert!(matches!(
            train_filter(&data, &TrainConfig::default()),
            Err(Error::Dataset(_))
        ));
        assert!(matches!(
            train_filter(&[], &TrainConfig::default()),
            Err(Error::Dataset(_))
        ));
    }

    #[test]
    fn single_sample_overfits() {
        let data = vec![TrainingSample {
            conf: vec![1.0; 4],
            labels: vec![1; 4],
            mask_active: vec![true; 4],
        }];
        let cfg = TrainConfig {
            epochs: 300,
            learning_rate: 0.01,
            ..Default::default()
        };
        let (model, hist) = train_filter(&data, &cfg).unwrap();
        assert_eq!(hist.len(), 300);
        assert!(hist.iter().all(|e| e.validation.is_none()));
        // monotone once the optimizer has warmed up
        for w in hist[20..].windows(2) {
            assert!(w[1].train <= w[0].train + 1e-12, "{:?}", w);
        }
        assert!(hist.last().unwrap().train < 0.01);
        assert!(model.probabilities(&[1.0; 4]).unwrap().iter().all(|&p| p > 0.99));
    }

    #[test]
    fn deterministic_given_seed() {
        let data = threshold_dataset(64, 4, 3);
        let cfg = TrainConfig {
            epochs: 5,
            batch_size: 8,
            ..Default::default()
        };
        let (a, ha) = train_filter(&data, &cfg).unwrap();
        let (b, hb) = train_filter(&data, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ha, hb);
        let params: Vec<f64> = a.params().collect();
        assert!(params.iter().all(|&p| (p as f32) as f64 == p));
    }
}
