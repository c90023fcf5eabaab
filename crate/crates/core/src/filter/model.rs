use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the pre-activation `x` and output `y`.
    #[inline]
    pub fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::Config(format!("unknown activation {other:?}"))),
        }
    }
}

/// Fully connected layer. `weights` is row-major `inputs x outputs`, so the
/// layer computes `W^T x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    #[inline]
    pub fn weight(&self, i: usize, o: usize) -> f64 {
        self.weights[i * self.outputs + o]
    }

    pub fn num_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn forward_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&self.bias);
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let row = &self.weights[i * self.outputs..(i + 1) * self.outputs];
            for (o, w) in out.iter_mut().zip(row) {
                *o += xi * w;
            }
        }
    }
}

/// The filter: an MLP over a block's confidence vector whose outputs are
/// per-position logits for "keep this prediction".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterModel {
    layers: Vec<Dense>,
    activation: Activation,
}

/// Gradient of the loss with the same layout as [`FilterModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn zeros_like(model: &FilterModel) -> Self {
        Self {
            layers: model.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect(),
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|g| g.is_finite()))
    }

    fn scale(&mut self, k: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|g| *g *= k);
        }
    }
}

/// Layer widths for an MLP with `depth` linear layers mapping `width` inputs
/// to `width` outputs through hidden layers of size `hidden`.
pub fn layer_widths(width: usize, hidden: usize, depth: usize) -> Vec<usize> {
    let mut widths = vec![width];
    widths.extend(std::iter::repeat_n(hidden, depth.saturating_sub(1)));
    widths.push(width);
    widths
}

/// Trainable parameters of the default two-layer filter: `2 s^2 + 2 s`.
pub fn param_count(block_size: usize) -> usize {
    2 * block_size * block_size + 2 * block_size
}

impl FilterModel {
    pub fn zeros(widths: &[usize], activation: Activation) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::Config(format!("invalid layer widths {widths:?}")));
        }
        let layers = widths.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        Ok(Self { layers, activation })
    }

    /// Uniform `(-1/sqrt(fan_in), 1/sqrt(fan_in))` initialisation with every
    /// value representable as `f32`.
    pub fn random<R: Rng + ?Sized>(widths: &[usize], activation: Activation, rng: &mut R) -> Result<Self> {
        let mut model = Self::zeros(widths, activation)?;
        for layer in &mut model.layers {
            let bound = 1.0 / (layer.inputs as f64).sqrt();
            for p in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                *p = (rng.gen_range(-bound..bound) as f32) as f64;
            }
        }
        Ok(model)
    }

    pub fn from_layers(layers: Vec<Dense>, activation: Activation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("filter needs at least one layer".into()));
        }
        for l in &layers {
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::Format("layer arrays do not match declared widths".into()));
            }
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::Dimension {
                    expected: pair[0].outputs,
                    got: pair[1].inputs,
                });
            }
        }
        let model = Self { layers, activation };
        if model.input_width() != model.output_width() {
            return Err(Error::Config("filter input and output widths differ".into()));
        }
        Ok(model)
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.layers[0].inputs];
        w.extend(self.layers.iter().map(|l| l.outputs));
        w
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Dense::num_params).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|p| p.is_finite())
    }

    /// All parameters in layer order, weights before bias.
    pub fn params(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    /// Rounds every parameter to the nearest `f32`.
    pub fn round_to_f32(&mut self) {
        for p in self.params_mut() {
            *p = (*p as f32) as f64;
        }
    }

    fn check_width(&self, got: usize) -> Result<()> {
        if got != self.input_width() {
            return Err(Error::Dimension {
                expected: self.input_width(),
                got,
            });
        }
        Ok(())
    }

    /// Logits for one confidence vector.
    pub fn forward(&self, conf: &[f64]) -> Result<Vec<f64>> {
        self.check_width(conf.len())?;
        let mut h = conf.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            layer.forward_into(&h, &mut next);
            if l != last {
                for x in next.iter_mut() {
                    *x = self.activation.apply(*x);
                }
            }
            std::mem::swap(&mut h, &mut next);
        }
        Ok(h)
    }

    /// Per-position keep probabilities.
    pub fn probabilities(&self, conf: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(conf)?.into_iter().map(sigmoid).collect())
    }

    /// Adds the gradient of `sum over active j of bce(z_j, y_j)` for one
    /// sample into `grads`; returns that summed loss.
    pub(crate) fn accumulate_gradients(
        &self,
        conf: &[f64],
        labels: &[f64],
        active: &[bool],
        grads: &mut Gradients,
        scratch: &mut Scratch,
    ) -> f64 {
        let last = self.layers.len() - 1;
        // forward, keeping pre-activations and outputs of every layer
        scratch.outputs.resize_with(self.layers.len() + 1, Vec::new);
        scratch.pre.resize_with(self.layers.len(), Vec::new);
        scratch.outputs[0].clear();
        scratch.outputs[0].extend_from_slice(conf);
        for (l, layer) in self.layers.iter().enumerate() {
            let (head, tail) = scratch.outputs.split_at_mut(l + 1);
            layer.forward_into(&head[l], &mut scratch.pre[l]);
            let out = &mut tail[0];
            out.clear();
            if l == last {
                out.extend_from_slice(&scratch.pre[l]);
            } else {
                out.extend(scratch.pre[l].iter().map(|&x| self.activation.apply(x)));
            }
        }

        let logits = &scratch.outputs[self.layers.len()];
        let mut loss = 0.0;
        scratch.delta.clear();
        for ((&z, &y), &a) in logits.iter().zip(labels).zip(active) {
            if a {
                loss += bce_term(z, y);
                scratch.delta.push(sigmoid(z) - y);
            } else {
                scratch.delta.push(0.0);
            }
        }

        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &scratch.outputs[l];
            let g = &mut grads.layers[l];
            for (gb, d) in g.bias.iter_mut().zip(&scratch.delta) {
                *gb += d;
            }
            for (i, &xi) in input.iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                let row = &mut g.weights[i * layer.outputs..(i + 1) * layer.outputs];
                for (gw, d) in row.iter_mut().zip(&scratch.delta) {
                    *gw += xi * d;
                }
            }
            if l == 0 {
                break;
            }
            scratch.prev_delta.clear();
            let below_pre = &scratch.pre[l - 1];
            for (i, (&x, &y)) in below_pre.iter().zip(input).enumerate() {
                let d_act = self.activation.derivative(x, y);
                if d_act == 0.0 {
                    scratch.prev_delta.push(0.0);
                    continue;
                }
                let row = &layer.weights[i * layer.outputs..(i + 1) * layer.outputs];
                let s: f64 = row.iter().zip(&scratch.delta).map(|(w, d)| w * d).sum();
                scratch.prev_delta.push(s * d_act);
            }
            std::mem::swap(&mut scratch.delta, &mut scratch.prev_delta);
        }
        loss
    }
}

#[derive(Debug, Default)]
pub(crate) struct Scratch {
    outputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    delta: Vec<f64>,
    prev_delta: Vec<f64>,
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `-[y ln s(z) + (1-y) ln(1 - s(z))]` in the form `max(z,0) - z y + ln(1 + e^-|z|)`.
#[inline]
fn bce_term(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

fn check_lengths(logits: usize, labels: usize, active: usize) -> Result<()> {
    if labels != logits {
        return Err(Error::Dimension {
            expected: logits,
            got: labels,
        });
    }
    if active != logits {
        return Err(Error::Dimension {
            expected: logits,
            got: active,
        });
    }
    Ok(())
}

/// Mean binary cross-entropy over the active positions.
pub fn bce_loss(logits: &[f64], labels: &[f64], active: &[bool]) -> Result<f64> {
    check_lengths(logits.len(), labels.len(), active.len())?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for ((&z, &y), &a) in logits.iter().zip(labels).zip(active) {
        if a {
            sum += bce_term(z, y);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyBatch);
    }
    Ok(sum / count as f64)
}

/// Analytic gradient of [`bce_loss`] over `model.forward(conf)`.
pub fn bce_backward(model: &FilterModel, conf: &[f64], labels: &[f64], active: &[bool]) -> Result<Gradients> {
    model.check_width(conf.len())?;
    check_lengths(model.output_width(), labels.len(), active.len())?;
    batch_gradients(model, std::iter::once((conf, labels, active))).map(|(_, g)| g)
}

/// Mean loss and gradient over every active position of every sample.
pub(crate) fn batch_gradients<'a, I>(model: &FilterModel, samples: I) -> Result<(f64, Gradients)>
where
    I: IntoIterator<Item = (&'a [f64], &'a [f64], &'a [bool])>,
{
    let mut grads = Gradients::zeros_like(model);
    let mut scratch = Scratch::default();
    let mut loss = 0.0;
    let mut count = 0usize;
    for (conf, labels, active) in samples {
        let n = active.iter().filter(|&&a| a).count();
        if n == 0 {
            continue;
        }
        loss += model.accumulate_gradients(conf, labels, active, &mut grads, &mut scratch);
        count += n;
    }
    if count == 0 {
        return Err(Error::EmptyBatch);
    }
    grads.scale(1.0 / count as f64);
    Ok((loss / count as f64, grads))
}
