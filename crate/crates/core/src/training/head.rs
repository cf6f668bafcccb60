use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Linear layer mapping the pooled `[CLS]` vector to two class logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierHead<F> {
    /// Row k holds the weights of class k.
    pub weight: [Vec<F>; 2],
    pub bias: [F; 2],
}

impl<F: Float> ClassifierHead<F> {
    pub fn new(weight: [Vec<F>; 2], bias: [F; 2]) -> Result<Self> {
        if weight[0].len() != weight[1].len() {
            return Err(Error::DimensionMismatch {
                expected: weight[0].len(),
                actual: weight[1].len(),
            });
        }
        Ok(ClassifierHead { weight, bias })
    }

    pub fn zeros(hidden: usize) -> Self {
        ClassifierHead {
            weight: [vec![F::zero(); hidden], vec![F::zero(); hidden]],
            bias: [F::zero(); 2],
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.weight[0].len()
    }

    pub fn logits(&self, pooled: &[F]) -> Result<[F; 2]> {
        if pooled.len() != self.hidden_size() {
            return Err(Error::DimensionMismatch {
                expected: self.hidden_size(),
                actual: pooled.len(),
            });
        }
        let dot = |w: &[F]| w.iter().zip(pooled).fold(F::zero(), |acc, (&a, &b)| acc + a * b);
        Ok([dot(&self.weight[0]) + self.bias[0], dot(&self.weight[1]) + self.bias[1]])
    }
}

/// Max-shifted softmax.
pub fn softmax<F: Float>(logits: &[F]) -> Vec<F> {
    let max = logits.iter().copied().fold(F::neg_infinity(), F::max);
    let exps: Vec<F> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum = exps.iter().copied().fold(F::zero(), |a, b| a + b);
    exps.into_iter().map(|e| e / sum).collect()
}

/// `softmax(W·h + b)`.
pub fn head_forward<F: Float>(pooled: &[F], head: &ClassifierHead<F>) -> Result<[F; 2]> {
    let p = softmax(&head.logits(pooled)?);
    Ok([p[0], p[1]])
}
