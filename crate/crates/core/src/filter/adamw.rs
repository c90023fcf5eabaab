use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::model::{FilterModel, Gradients};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// First and second moment estimates, flat in [`FilterModel::params`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamWState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamWState {
    pub fn new(model: &FilterModel) -> Self {
        let n = model.num_params();
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }
}

/// One AdamW update with decoupled weight decay and bias-corrected moments.
///
/// Non-finite gradients are rejected before anything is modified.
pub fn adamw_step(model: &mut FilterModel, grads: &Gradients, state: &mut AdamWState, cfg: &AdamWConfig) -> Result<()> {
    if state.m.len() != model.num_params() || state.v.len() != model.num_params() {
        return Err(Error::Dimension {
            expected: model.num_params(),
            got: state.m.len(),
        });
    }
    let g = grads.flat();
    if g.len() != model.num_params() {
        return Err(Error::Dimension {
            expected: model.num_params(),
            got: g.len(),
        });
    }
    if !g.iter().all(|x| x.is_finite()) {
        return Err(Error::Optimizer("non-finite gradient".into()));
    }
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    let lr = cfg.learning_rate;
    let decay = 1.0 - lr * cfg.weight_decay;
    for (((p, &gi), m), v) in model
        .params_mut()
        .zip(&g)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *p *= decay;
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * gi;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * gi * gi;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::model::{Activation, FilterModel};
    use crate::rng;

    fn model() -> FilterModel {
        FilterModel::random(&[3, 3, 3], Activation::Relu, &mut rng::seeded(1)).unwrap()
    }

    #[test]
    fn zero_gradient_without_decay_is_fixed_point() {
        let mut m = model();
        let before = m.clone();
        let mut st = AdamWState::new(&m);
        let cfg = AdamWConfig {
            weight_decay: 0.0,
            ..Default::default()
        };
        let zero = Gradients::zeros_like(&m);
        adamw_step(&mut m, &zero, &mut st, &cfg).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn decay_shrinks_multiplicatively() {
        let mut m = model();
        let before: Vec<f64> = m.params().collect();
        let mut st = AdamWState::new(&m);
        let cfg = AdamWConfig {
            learning_rate: 0.1,
            weight_decay: 0.5,
            ..Default::default()
        };
        let zero = Gradients::zeros_like(&m);
        adamw_step(&mut m, &zero, &mut st, &cfg).unwrap();
        for (a, b) in m.params().zip(before) {
            assert_eq!(a, b * (1.0 - 0.1 * 0.5));
        }
    }

    #[test]
    fn single_step_matches_hand_calculation() {
        let mut m = model();
        let p0: Vec<f64> = m.params().collect();
        let mut grads = Gradients::zeros_like(&m);
        let mut k = 0.0_f64;
        for l in &mut grads.layers {
            for g in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                k += 1.0;
                *g = (k * 0.37).sin() * 0.01;
            }
        }
        let g = grads.flat();
        let cfg = AdamWConfig::default();
        let mut st = AdamWState::new(&m);
        adamw_step(&mut m, &grads, &mut st, &cfg).unwrap();
        for ((p, p0), g) in m.params().zip(p0).zip(g) {
            // m_hat = g, v_hat = g^2 after one step from zero moments
            let m1 = (1.0 - 0.9) * g;
            let v1 = (1.0 - 0.999) * g * g;
            let m_hat = m1 / (1.0 - 0.9);
            let v_hat = v1 / (1.0 - 0.999);
            let expected = p0 * (1.0 - 1e-3 * 0.01) - 1e-3 * m_hat / (v_hat.sqrt() + 1e-8);
            assert!((p - expected).abs() < 1e-10, "{p} vs {expected}");
            // close to a signed step of size lr
            assert!((p - p0 * (1.0 - 1e-5) + 1e-3 * g.signum()).abs() < 1e-6);
        }
    }

    #[test]
    fn non_finite_gradient_aborts_without_change() {
        let mut m = model();
        let before = m.clone();
        let mut st = AdamWState::new(&m);
        let mut grads = Gradients::zeros_like(&m);
        grads.layers[0].bias[1] = f64::NAN;
        let err = adamw_step(&mut m, &grads, &mut st, &AdamWConfig::default());
        assert!(matches!(err, Err(Error::Optimizer(_))));
        assert_eq!(m, before);
        assert_eq!(st.t, 0);
    }
}
