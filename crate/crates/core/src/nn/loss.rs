//! Binary cross-entropy with soft targets.
//!
//! All losses here are the negative mean log-likelihood
//! `-(1/N) Σ [y log p + (1 - y) log(1 - p)]`, so they are non-negative and
//! minimised at `p = y`. Targets may be any value in `[0, 1]`.

use alloc::format;
use alloc::vec::Vec;

use super::{sigmoid, softplus};
use crate::error::{Error, Result};

/// Clamp applied to probabilities before taking logarithms.
pub const BCE_EPS: f64 = 1e-7;

fn check(predicted: usize, target: usize, context: &'static str) -> Result<()> {
    if predicted != target {
        return Err(Error::shape(context, predicted, target));
    }
    if predicted == 0 {
        return Err(Error::Domain(format!("{context}: empty input")));
    }
    Ok(())
}

#[inline]
fn clamp_prob(p: f64) -> f64 {
    p.clamp(BCE_EPS, 1.0 - BCE_EPS)
}

pub fn bce(predicted: &[f64], target: &[f64]) -> Result<f64> {
    check(predicted.len(), target.len(), "bce")?;
    let n = predicted.len() as f64;
    let sum: f64 = predicted
        .iter()
        .zip(target)
        .map(|(&p, &y)| {
            let p = clamp_prob(p);
            y * libm::log(p) + (1.0 - y) * libm::log(1.0 - p)
        })
        .sum();
    Ok(-sum / n)
}

/// Derivative of [`bce`] with respect to each prediction, on clamped values.
pub fn bce_grad(predicted: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    check(predicted.len(), target.len(), "bce_grad")?;
    let n = predicted.len() as f64;
    Ok(predicted
        .iter()
        .zip(target)
        .map(|(&p, &y)| {
            let p = clamp_prob(p);
            (p - y) / (p * (1.0 - p)) / n
        })
        .collect())
}

/// [`bce`] of `sigmoid(logits)`, evaluated in logit space.
///
/// Equal to `bce(sigmoid(z), y)` wherever `sigmoid(z)` lies inside the clamp
/// window; beyond it the gradient `sigmoid(z) - y` does not vanish.
pub fn bce_with_logits(logits: &[f64], target: &[f64]) -> Result<f64> {
    check(logits.len(), target.len(), "bce_with_logits")?;
    Ok(bce_with_logits_sum(logits, target) / logits.len() as f64)
}

/// Unnormalised sum `Σ softplus(z) - y z`.
pub(crate) fn bce_with_logits_sum(logits: &[f64], target: &[f64]) -> f64 {
    logits
        .iter()
        .zip(target)
        .map(|(&z, &y)| softplus(z) - y * z)
        .sum()
}

pub fn bce_with_logits_grad(logits: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    check(logits.len(), target.len(), "bce_with_logits_grad")?;
    let n = logits.len() as f64;
    Ok(logits
        .iter()
        .zip(target)
        .map(|(&z, &y)| (sigmoid(z) - y) / n)
        .collect())
}
