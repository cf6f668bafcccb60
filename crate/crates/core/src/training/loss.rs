use num_traits::Float;

use super::head::{head_forward, ClassifierHead};
use crate::scalar::lit;
use crate::{Error, Result};

/// Probabilities are clamped here before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// `(1 − α)·one_hot(label) + α/K`.
pub fn smooth_targets<F: Float>(label_index: usize, alpha: F, num_classes: usize) -> Result<Vec<F>> {
    if !(alpha >= F::zero() && alpha < F::one()) {
        return Err(Error::InvalidInput("label smoothing alpha must lie in [0, 1)".into()));
    }
    if num_classes < 2 || label_index >= num_classes {
        return Err(Error::InvalidInput(format!(
            "label {label_index} invalid for {num_classes} classes"
        )));
    }
    let k = F::from(num_classes).unwrap();
    let off = alpha / k;
    // on-target value written as 1 − (K−1)·off so the vector sums to one
    let on = F::one() - (k - F::one()) * off;
    Ok((0..num_classes).map(|i| if i == label_index { on } else { off }).collect())
}

fn check_distribution<F: Float>(v: &[F], what: &str) -> Result<()> {
    let sum = v.iter().copied().fold(F::zero(), |a, b| a + b);
    let ok = v.iter().all(|&x| x >= F::zero() && x <= F::one())
        && (sum - F::one()).abs() <= lit(NORMALIZATION_TOLERANCE);
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} is not a probability distribution")))
    }
}

/// `−Σ_k t_k · ln(max(p_k, 1e-12))` for one example.
pub fn smoothed_cross_entropy<F: Float>(probs: &[F], target: &[F]) -> Result<F> {
    if probs.len() != target.len() {
        return Err(Error::DimensionMismatch {
            expected: target.len(),
            actual: probs.len(),
        });
    }
    check_distribution(probs, "probs")?;
    check_distribution(target, "target")?;
    let floor = lit::<F>(PROB_FLOOR);
    Ok(probs
        .iter()
        .zip(target)
        .fold(F::zero(), |acc, (&p, &t)| acc - t * p.max(floor).ln()))
}

/// Batch mean of [`smoothed_cross_entropy`].
pub fn mean_smoothed_cross_entropy<F: Float>(probs: &[Vec<F>], targets: &[Vec<F>]) -> Result<F> {
    if probs.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: targets.len(),
            actual: probs.len(),
        });
    }
    if probs.is_empty() {
        return Err(Error::NoData("empty batch".into()));
    }
    let mut total = F::zero();
    for (p, t) in probs.iter().zip(targets) {
        total = total + smoothed_cross_entropy(p, t)?;
    }
    Ok(total / F::from(probs.len()).unwrap())
}

/// Shannon entropy in nats; the floor of the smoothed loss.
pub fn entropy<F: Float>(p: &[F]) -> F {
    p.iter()
        .filter(|&&x| x > F::zero())
        .fold(F::zero(), |acc, &x| acc - x * x.ln())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadGradient<F> {
    pub loss: F,
    pub weight: [Vec<F>; 2],
    pub bias: [F; 2],
}

/// Loss of `head_forward` against `target` and its analytic gradient.
///
/// With `z = W·h + b` and softmax output `p`, `∂L/∂z = p − t` whenever the
/// target sums to one, hence `∂L/∂W = (p − t)·hᵀ` and `∂L/∂b = p − t`.
pub fn head_loss_gradient<F: Float>(pooled: &[F], head: &ClassifierHead<F>, target: &[F; 2]) -> Result<HeadGradient<F>> {
    let p = head_forward(pooled, head)?;
    let loss = smoothed_cross_entropy(&p, target)?;
    let dz = [p[0] - target[0], p[1] - target[1]];
    let row = |k: usize| pooled.iter().map(|&h| dz[k] * h).collect::<Vec<F>>();
    Ok(HeadGradient {
        loss,
        weight: [row(0), row(1)],
        bias: dz,
    })
}
