//! Labeled-split evaluation and unlabeled batch prediction.

use newsprobe_core::dataset::{encode, LabeledExample};
use newsprobe_core::evaluation::{ClassificationReport, DEFAULT_POSITIVE};
use newsprobe_core::training::{smooth_targets, smoothed_cross_entropy};
use newsprobe_core::{Article, OriginLabel, Prediction};
use serde::{Deserialize, Serialize};

use crate::classifier::Classifier;
use crate::{ModelError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitEvaluation {
    pub report: ClassificationReport,
    /// Mean label-smoothed cross-entropy.
    pub loss: f64,
    pub predictions: Vec<Prediction>,
}

/// Metrics, loss and per-example predictions in inference mode.
pub fn evaluate_split(
    classifier: &Classifier,
    examples: &[LabeledExample],
    batch_size: usize,
    label_smoothing: f64,
) -> Result<SplitEvaluation> {
    if examples.is_empty() {
        return Err(ModelError::Core(newsprobe_core::Error::NoData("empty evaluation split".into())));
    }
    let encodings: Vec<_> = examples
        .iter()
        .map(|e| encode(e, &classifier.tokenizer, &classifier.spec))
        .collect();
    let probs = classifier.predict_proba(&encodings, batch_size)?;
    let mut loss = 0.0;
    let mut predictions = Vec::with_capacity(examples.len());
    let mut pairs = Vec::with_capacity(examples.len());
    for (ex, p) in examples.iter().zip(&probs) {
        let target = smooth_targets(ex.label.index(), label_smoothing, 2)?;
        loss += smoothed_cross_entropy(p, &target)?;
        let pred = Prediction::from_probabilities(ex.id.clone(), ex.source.clone(), ex.year, *p)?;
        pairs.push((pred.predicted, ex.label));
        predictions.push(pred);
    }
    Ok(SplitEvaluation {
        report: ClassificationReport::from_pairs(&pairs, DEFAULT_POSITIVE)?,
        loss: loss / examples.len() as f64,
        predictions,
    })
}

/// One prediction per article, in input order.
pub fn predict_batch(classifier: &Classifier, articles: &[Article], batch_size: usize) -> Result<Vec<Prediction>> {
    let encodings: Vec<_> = articles.iter().map(|a| classifier.encode(&a.body)).collect();
    let probs = classifier.predict_proba(&encodings, batch_size)?;
    articles
        .iter()
        .zip(probs)
        .map(|(a, p)| Ok(Prediction::from_probabilities(a.id.clone(), a.source.clone(), a.year(), p)?))
        .collect()
}

/// `(predicted, true)` pairs recovered from predictions and their examples.
pub fn prediction_pairs(predictions: &[Prediction], examples: &[LabeledExample]) -> Vec<(OriginLabel, OriginLabel)> {
    predictions
        .iter()
        .zip(examples)
        .map(|(p, e)| (p.predicted, e.label))
        .collect()
}
