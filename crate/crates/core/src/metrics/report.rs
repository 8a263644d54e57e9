use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{ConfusionMatrix, FoldSummary, MeanStd, MetricSet};
use crate::training::TrainHistory;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldEntry {
    pub fold_index: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: ConfusionMatrix,
    pub per_class: MetricSet,
    pub train_samples: usize,
    pub val_samples: usize,
    pub test_samples: usize,
}

impl FoldEntry {
    pub fn from_outcome(o: &FoldOutcome) -> Self {
        Self {
            fold_index: o.fold_index,
            accuracy: o.metrics.accuracy,
            precision: o.metrics.macro_precision,
            recall: o.metrics.macro_recall,
            f1: o.metrics.macro_f1,
            confusion: o.confusion.clone(),
            per_class: o.metrics.clone(),
            train_samples: o.train_samples,
            val_samples: o.val_samples,
            test_samples: o.test_samples,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub accuracy: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
    /// Percentages to two decimals, `mean ± std`.
    pub display: BTreeMap<String, String>,
}

/// Raw per-fold metric values, ready for box plots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Boxplot {
    pub accuracy: Vec<f64>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub fold_index: usize,
    #[serde(flatten)]
    pub history: TrainHistory,
}

/// Per-fold outcome handed to [`Report::new`].
#[derive(Clone, Debug, PartialEq)]
pub struct FoldOutcome {
    pub fold_index: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricSet,
    pub history: TrainHistory,
    pub train_samples: usize,
    pub val_samples: usize,
    pub test_samples: usize,
}

/// Cross-validation report. Serialised as pretty JSON with no timestamps,
/// so identical runs produce identical bytes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: BTreeMap<String, String>,
    pub folds: Vec<FoldEntry>,
    pub aggregate: Aggregate,
    pub boxplot: Boxplot,
    pub histories: Vec<HistoryEntry>,
}

impl Report {
    /// `outcomes` must already be sorted by fold index.
    pub fn new(config: BTreeMap<String, String>, summary: &FoldSummary, outcomes: &[FoldOutcome]) -> Result<Self> {
        if summary.folds.len() != outcomes.len() {
            return Err(Error::Aggregation(format!(
                "summary has {} folds, {} outcomes given",
                summary.folds.len(),
                outcomes.len()
            )));
        }
        let folds = outcomes.iter().map(FoldEntry::from_outcome).collect::<Vec<_>>();
        let display = [
            ("accuracy", &summary.accuracy),
            ("precision", &summary.precision),
            ("recall", &summary.recall),
            ("f1", &summary.f1),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.percent()))
        .collect();
        let boxplot = Boxplot {
            accuracy: folds.iter().map(|f| f.accuracy).collect(),
            precision: folds.iter().map(|f| f.precision).collect(),
            recall: folds.iter().map(|f| f.recall).collect(),
            f1: folds.iter().map(|f| f.f1).collect(),
        };
        Ok(Self {
            config,
            aggregate: Aggregate {
                accuracy: summary.accuracy,
                precision: summary.precision,
                recall: summary.recall,
                f1: summary.f1,
                display,
            },
            boxplot,
            histories: outcomes
                .iter()
                .map(|o| HistoryEntry {
                    fold_index: o.fold_index,
                    history: o.history.clone(),
                })
                .collect(),
            folds,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Data(format!("invalid report: {e}")))
    }
}

pub fn write_report(report: &Report, path: &Path) -> Result<()> {
    std::fs::write(path, report.to_json()).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<Report> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Report::from_json(&s)
}
