//! Evaluation: confusion matrices, per-class reports, McNemar's test and
//! k-fold cross-validation.

mod cv;
mod mcnemar;

pub use cv::{cross_validate, kfold_indices, stratified_kfold_indices, CvSummary};
pub use mcnemar::{binomial_two_sided, mcnemar_from_counts, mcnemar_test, McNemarMethod, McNemarResult, EXACT_THRESHOLD};

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::{Display, Write};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("{truth} true labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("label `{0}` is not in the label list")]
    UnknownLabel(String),
    #[error("k-fold needs k >= 2 and at least k examples (k = {k}, n = {n})")]
    InvalidFolds { k: usize, n: usize },
    #[error("class `{label}` has {count} examples, fewer than k = {k}")]
    ClassTooRare { label: String, count: usize, k: usize },
}

/// `counts[i][j]`: examples of `labels[i]` predicted as `labels[j]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix<L> {
    pub labels: Vec<L>,
    pub counts: Vec<Vec<u64>>,
}

fn position<L: PartialEq + Display>(labels: &[L], l: &L) -> Result<usize, MetricsError> {
    labels
        .iter()
        .position(|x| x == l)
        .ok_or_else(|| MetricsError::UnknownLabel(format!("{l}")))
}

impl<L: Clone + PartialEq + Display> ConfusionMatrix<L> {
    pub fn from_predictions(y_true: &[L], y_pred: &[L], labels: &[L]) -> Result<Self, MetricsError> {
        if y_true.len() != y_pred.len() {
            return Err(MetricsError::LengthMismatch {
                truth: y_true.len(),
                predicted: y_pred.len(),
            });
        }
        let n = labels.len();
        let mut counts = vec![vec![0u64; n]; n];
        for (t, p) in y_true.iter().zip(y_pred) {
            counts[position(labels, t)?][position(labels, p)?] += 1;
        }
        Ok(ConfusionMatrix {
            labels: labels.to_vec(),
            counts,
        })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn support(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn predicted(&self, j: usize) -> u64 {
        self.counts.iter().map(|r| r[j]).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.trace(), self.total()).0
    }

    /// Rows divided by their sums; empty rows stay zero.
    pub fn row_normalized(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let s: u64 = row.iter().sum();
                row.iter().map(|&c| ratio(c, s).0).collect()
            })
            .collect()
    }
}

/// `a / b` and whether the division was 0/0.
fn ratio(a: u64, b: u64) -> (f64, bool) {
    if b == 0 {
        (0.0, true)
    } else {
        (a as f64 / b as f64, false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics<L> {
    pub label: L,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// Set when any of the three scores hit a zero denominator and was set to 0.
    pub zero_division: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport<L> {
    pub per_class: Vec<ClassMetrics<L>>,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub total: u64,
    pub confusion: ConfusionMatrix<L>,
}

pub fn classification_report<L: Clone + PartialEq + Display>(
    y_true: &[L],
    y_pred: &[L],
    labels: &[L],
) -> Result<ClassificationReport<L>, MetricsError> {
    if y_true.is_empty() {
        return Err(MetricsError::Empty);
    }
    let cm = ConfusionMatrix::from_predictions(y_true, y_pred, labels)?;
    Ok(report_from_confusion(cm))
}

pub fn report_from_confusion<L: Clone + PartialEq + Display>(cm: ConfusionMatrix<L>) -> ClassificationReport<L> {
    let per_class: Vec<ClassMetrics<L>> = cm
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let tp = cm.counts[i][i];
            let (precision, pz) = ratio(tp, cm.predicted(i));
            let (recall, rz) = ratio(tp, cm.support(i));
            let (f1, fz) = if precision + recall == 0.0 {
                (0.0, true)
            } else {
                (2.0 * precision * recall / (precision + recall), false)
            };
            ClassMetrics {
                label: l.clone(),
                precision,
                recall,
                f1,
                support: cm.support(i),
                zero_division: pz || rz || fz,
            }
        })
        .collect();
    let k = per_class.len().max(1) as f64;
    let total = cm.total();
    let macro_of = |f: fn(&ClassMetrics<L>) -> f64| per_class.iter().map(f).sum::<f64>() / k;
    let weighted_of = |f: fn(&ClassMetrics<L>) -> f64| {
        if total == 0 {
            0.0
        } else {
            per_class.iter().map(|c| f(c) * c.support as f64).sum::<f64>() / total as f64
        }
    };
    ClassificationReport {
        accuracy: cm.accuracy(),
        macro_precision: macro_of(|c| c.precision),
        macro_recall: macro_of(|c| c.recall),
        macro_f1: macro_of(|c| c.f1),
        weighted_precision: weighted_of(|c| c.precision),
        weighted_recall: weighted_of(|c| c.recall),
        weighted_f1: weighted_of(|c| c.f1),
        total,
        per_class,
        confusion: cm,
    }
}

impl<L: Display> ClassificationReport<L> {
    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let width = self
            .per_class
            .iter()
            .map(|c| format!("{}", c.label).len())
            .chain(core::iter::once("weighted avg".len()))
            .max()
            .unwrap_or(0);
        let mut out = String::new();
        let _ = writeln!(out, "{:>width$}  precision     recall   f1-score    support", "");
        for c in &self.per_class {
            let name = format!("{}", c.label);
            let _ = writeln!(
                out,
                "{name:>width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>9}{}",
                c.precision,
                c.recall,
                c.f1,
                c.support,
                if c.zero_division { "  *" } else { "" }
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:>width$}  {:>9}  {:>9}  {:>9.4}  {:>9}", "accuracy", "", "", self.accuracy, self.total);
        let _ = writeln!(
            out,
            "{:>width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>9}",
            "macro avg", self.macro_precision, self.macro_recall, self.macro_f1, self.total
        );
        let _ = writeln!(
            out,
            "{:>width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>9}",
            "weighted avg", self.weighted_precision, self.weighted_recall, self.weighted_f1, self.total
        );
        if self.per_class.iter().any(|c| c.zero_division) {
            let _ = writeln!(out, "\n* zero denominator; score set to 0");
        }
        out
    }
}
