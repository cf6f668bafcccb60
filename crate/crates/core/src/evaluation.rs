//! Confusion matrices and accuracy / precision / recall / F1.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::OriginLabel;
use crate::{Error, Result, Scalar};

/// Class treated as positive when a single precision/recall/F1 is reported.
pub const DEFAULT_POSITIVE: OriginLabel = OriginLabel::AiRewritten;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub positive_class: OriginLabel,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Same predictions, the other class declared positive.
    pub fn with_swapped_positive(&self) -> Self {
        ConfusionMatrix {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
            positive_class: self.positive_class.other(),
        }
    }

    /// True-class counts indexed by [`OriginLabel::index`].
    pub fn support(&self) -> [u64; 2] {
        let pos = self.tp + self.fn_;
        let neg = self.tn + self.fp;
        let mut s = [0; 2];
        s[self.positive_class.index()] = pos;
        s[self.positive_class.other().index()] = neg;
        s
    }
}

/// Tallies `(predicted, true)` pairs.
pub fn confusion(pairs: &[(OriginLabel, OriginLabel)], positive_class: OriginLabel) -> Result<ConfusionMatrix> {
    if pairs.is_empty() {
        return Err(Error::NoData("no predictions to evaluate".into()));
    }
    let mut cm = ConfusionMatrix {
        tp: 0,
        fp: 0,
        fn_: 0,
        tn: 0,
        positive_class,
    };
    for &(pred, truth) in pairs {
        match (pred == positive_class, truth == positive_class) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics<T> {
    pub accuracy: T,
    pub precision: T,
    pub recall: T,
    pub f1: T,
    /// True-class counts indexed by [`OriginLabel::index`].
    pub support: [u64; 2],
    pub positive_class: OriginLabel,
}

fn ratio<T: Scalar>(num: u64, den: u64) -> T {
    if den == 0 {
        T::zero()
    } else {
        T::from_count(num) / T::from_count(den)
    }
}

/// Precision is 0 when nothing was predicted positive, recall is 0 when no
/// positive exists, and F1 is 0 when both are 0.
pub fn compute_metrics<T: Scalar>(cm: &ConfusionMatrix) -> Result<Metrics<T>> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::NoData("empty confusion matrix".into()));
    }
    let accuracy = ratio::<T>(cm.tp + cm.tn, total);
    let precision = ratio::<T>(cm.tp, cm.tp + cm.fp);
    let recall = ratio::<T>(cm.tp, cm.tp + cm.fn_);
    let two = T::one() + T::one();
    let f1 = if precision + recall > T::zero() {
        two * precision * recall / (precision + recall)
    } else {
        T::zero()
    };
    Ok(Metrics {
        accuracy,
        precision,
        recall,
        f1,
        support: cm.support(),
        positive_class: cm.positive_class,
    })
}

impl<T: Scalar> Metrics<T> {
    pub fn to_f64(&self) -> Metrics<f64> {
        Metrics {
            accuracy: self.accuracy.to_f64(),
            precision: self.precision.to_f64(),
            recall: self.recall.to_f64(),
            f1: self.f1.to_f64(),
            support: self.support,
            positive_class: self.positive_class,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: OriginLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Headline metrics plus per-class and macro-averaged figures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics<f64>,
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

impl ClassificationReport {
    pub fn from_confusion(cm: &ConfusionMatrix) -> Result<Self> {
        let metrics = compute_metrics::<f64>(cm)?;
        let mut per_class = Vec::with_capacity(2);
        for label in OriginLabel::ALL {
            let view = if label == cm.positive_class {
                *cm
            } else {
                cm.with_swapped_positive()
            };
            let m = compute_metrics::<f64>(&view)?;
            per_class.push(ClassMetrics {
                label,
                precision: m.precision,
                recall: m.recall,
                f1: m.f1,
                support: view.tp + view.fn_,
            });
        }
        let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / per_class.len() as f64;
        Ok(ClassificationReport {
            confusion: *cm,
            metrics,
            macro_precision: mean(|c| c.precision),
            macro_recall: mean(|c| c.recall),
            macro_f1: mean(|c| c.f1),
            per_class,
        })
    }

    pub fn from_pairs(pairs: &[(OriginLabel, OriginLabel)], positive_class: OriginLabel) -> Result<Self> {
        Self::from_confusion(&confusion(pairs, positive_class)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text table, columns ordered Accuracy, F1, Precision, Recall.
    pub fn to_table(&self) -> String {
        let m = &self.metrics;
        let mut out = String::new();
        let _ = writeln!(out, "{:<22} {:>8} {:>8} {:>9} {:>8} {:>8}", "", "Accuracy", "F1", "Precision", "Recall", "Support");
        let _ = writeln!(
            out,
            "{:<22} {:>8.4} {:>8.4} {:>9.4} {:>8.4} {:>8}",
            format!("positive={}", m.positive_class),
            m.accuracy,
            m.f1,
            m.precision,
            m.recall,
            m.support.iter().sum::<u64>()
        );
        for c in &self.per_class {
            let _ = writeln!(
                out,
                "{:<22} {:>8} {:>8.4} {:>9.4} {:>8.4} {:>8}",
                c.label.as_str(),
                "",
                c.f1,
                c.precision,
                c.recall,
                c.support
            );
        }
        let _ = writeln!(
            out,
            "{:<22} {:>8} {:>8.4} {:>9.4} {:>8.4}",
            "macro avg", "", self.macro_f1, self.macro_precision, self.macro_recall
        );
        let cm = &self.confusion;
        let _ = writeln!(out, "confusion: tp={} fp={} fn={} tn={}", cm.tp, cm.fp, cm.fn_, cm.tn);
        out
    }
}
