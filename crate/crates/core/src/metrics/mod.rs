//! Confusion-matrix metrics and cross-validation aggregation.
//!
//! Multi-class precision, recall and F1 are macro averages: the unweighted
//! mean over all `C` classes, where a class with an empty denominator scores
//! 0 and still counts towards the mean.

mod confusion;
mod report;

use serde::{Deserialize, Serialize};

pub use confusion::ConfusionMatrix;
pub use report::{read_report, write_report, Aggregate, Boxplot, FoldEntry, FoldOutcome, HistoryEntry, Report};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl MetricSet {
    pub fn from_confusion(cm: &ConfusionMatrix) -> Self {
        let c = cm.classes();
        let mut precision = Vec::with_capacity(c);
        let mut recall = Vec::with_capacity(c);
        let mut f1 = Vec::with_capacity(c);
        for k in 0..c {
            let tp = cm.true_positives(k);
            let p = ratio(tp, tp + cm.false_positives(k));
            let r = ratio(tp, tp + cm.false_negatives(k));
            let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
            precision.push(p);
            recall.push(r);
            f1.push(f);
        }
        let mean = |v: &[f64]| {
            if v.is_empty() {
                0.0
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        };
        Self {
            accuracy: ratio(cm.trace(), cm.total()),
            macro_precision: mean(&precision),
            macro_recall: mean(&recall),
            macro_f1: mean(&f1),
            precision,
            recall,
            f1,
        }
    }
}

pub fn evaluate(preds: &[usize], labels: &[usize], classes: usize) -> Result<(ConfusionMatrix, MetricSet)> {
    if preds.len() != labels.len() {
        return Err(Error::config(format!(
            "{} predictions for {} labels",
            preds.len(),
            labels.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::config("nothing to evaluate"));
    }
    let mut cm = ConfusionMatrix::new(classes);
    for (&p, &l) in preds.iter().zip(labels) {
        cm.record(l, p)?;
    }
    let m = MetricSet::from_confusion(&cm);
    Ok((cm, m))
}

/// Mean and sample (`n-1`) standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Aggregation(format!(
                "need at least 2 folds, got {}",
                values.len()
            )));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Ok(Self { mean, std: var.sqrt() })
    }

    /// `"85.00 ± 7.07"` with both values as percentages.
    pub fn percent(&self) -> String {
        format!("{:.2} ± {:.2}", 100.0 * self.mean, 100.0 * self.std)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub folds: Vec<MetricSet>,
    pub accuracy: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
}

impl FoldSummary {
    pub fn accuracies(&self) -> Vec<f64> {
        self.folds.iter().map(|m| m.accuracy).collect()
    }
}

pub fn aggregate_folds(folds: &[MetricSet]) -> Result<FoldSummary> {
    let pick = |f: fn(&MetricSet) -> f64| MeanStd::of(&folds.iter().map(f).collect::<Vec<_>>());
    Ok(FoldSummary {
        accuracy: pick(|m| m.accuracy)?,
        precision: pick(|m| m.macro_precision)?,
        recall: pick(|m| m.macro_recall)?,
        f1: pick(|m| m.macro_f1)?,
        folds: folds.to_vec(),
    })
}
