//! Masked-diffusion forward corruption and reverse transition sampling.
//!
//! The forward process replaces each position independently by the mask
//! token with probability `t`. The reverse transition from level `t` to an
//! earlier level `s < t` keeps unmasked positions, leaves a masked position
//! masked with probability `s / t`, and otherwise draws a token from the
//! predictor's distribution with the mask token excluded.

use rand::Rng;

use crate::error::{Error, Result};
use crate::vocab::{TokenId, Vocabulary};

/// Corruption level in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct NoiseLevel(f64);

impl NoiseLevel {
    pub fn new(t: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&t) {
            Ok(Self(t))
        } else {
            Err(Error::Domain(format!("noise level {t} outside [0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn forward_mask<R: Rng + ?Sized>(
    x0: &[TokenId],
    t: NoiseLevel,
    vocab: &Vocabulary,
    rng: &mut R,
) -> Result<Vec<TokenId>> {
    let m = vocab.mask_id();
    if let Some(i) = x0.iter().position(|&x| x == m) {
        return Err(Error::Precondition(format!(
            "clean sequence contains the mask token at {i}"
        )));
    }
    let t = t.value();
    Ok(x0.iter().map(|&x| if rng.gen::<f64>() < t { m } else { x }).collect())
}

/// Probability that a masked position stays masked when moving from `t` to `s`.
pub fn reverse_keep_mask_prob(s: NoiseLevel, t: NoiseLevel) -> Result<f64> {
    if t.value() == 0.0 || s.value() >= t.value() {
        return Err(Error::Domain(format!(
            "reverse transition needs 0 <= s < t <= 1, got s = {}, t = {}",
            s.value(),
            t.value()
        )));
    }
    Ok(s.value() / t.value())
}

pub fn sample_reverse_step<R: Rng + ?Sized>(
    xt: &[TokenId],
    s: NoiseLevel,
    t: NoiseLevel,
    predictor_dist: &[Vec<f64>],
    vocab: &Vocabulary,
    rng: &mut R,
) -> Result<Vec<TokenId>> {
    let keep = reverse_keep_mask_prob(s, t)?;
    if predictor_dist.len() != xt.len() {
        return Err(Error::Dimension {
            expected: xt.len(),
            got: predictor_dist.len(),
        });
    }
    let m = vocab.mask_id();
    let v = vocab.size() as usize;
    let mut out = Vec::with_capacity(xt.len());
    for (i, (&x, row)) in xt.iter().zip(predictor_dist).enumerate() {
        if x != m {
            out.push(x);
            continue;
        }
        check_row(i, row, v)?;
        if rng.gen::<f64>() < keep {
            out.push(m);
            continue;
        }
        let unmasked_mass: f64 = row
            .iter()
            .enumerate()
            .filter(|&(id, _)| id as TokenId != m)
            .map(|(_, p)| p)
            .sum();
        if unmasked_mass <= 0.0 {
            return Err(Error::Precondition(format!(
                "distribution at {i} puts all mass on the mask token"
            )));
        }
        let mut u = rng.gen::<f64>() * unmasked_mass;
        let mut chosen = None;
        for (id, &p) in row.iter().enumerate() {
            if id as TokenId == m || p <= 0.0 {
                continue;
            }
            chosen = Some(id as TokenId);
            if u < p {
                break;
            }
            u -= p;
        }
        // rounding can leave u marginally above the last positive bucket
        out.push(chosen.expect("positive unmasked mass implies a candidate"));
    }
    Ok(out)
}

fn check_row(i: usize, row: &[f64], v: usize) -> Result<()> {
    if row.len() != v {
        return Err(Error::Dimension {
            expected: v,
            got: row.len(),
        });
    }
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::Precondition(format!(
            "distribution at {i} has negative or non-finite entries"
        )));
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::Precondition(format!("distribution at {i} sums to {total}")));
    }
    Ok(())
}
