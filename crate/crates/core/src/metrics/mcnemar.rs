use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Discordant totals below this use the exact binomial test.
pub const EXACT_THRESHOLD: u64 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McNemarMethod {
    ExactBinomial,
    ChiSquareCorrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemarResult {
    /// A correct, B wrong.
    pub b: u64,
    /// A wrong, B right.
    pub c: u64,
    pub method: McNemarMethod,
    /// Chi-square value for the asymptotic branch, `min(b, c)` for the exact one.
    pub statistic: f64,
    pub p_value: f64,
    /// No discordant pairs; the p-value is fixed at 1.
    pub degenerate: bool,
}

/// Two-sided exact binomial p-value for `k` successes in `n` fair trials,
/// `min(1, 2 * P(X <= min(k, n - k)))`.
pub fn binomial_two_sided(k: u64, n: u64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let m = k.min(n - k);
    let ln2 = core::f64::consts::LN_2;
    let lg = |x: u64| libm::lgamma(x as f64 + 1.0);
    let mut tail = 0.0;
    for i in 0..=m {
        let log_pmf = lg(n) - lg(i) - lg(n - i) - n as f64 * ln2;
        tail += libm::exp(log_pmf);
    }
    (2.0 * tail).min(1.0)
}

pub fn mcnemar_from_counts(b: u64, c: u64) -> McNemarResult {
    let n = b + c;
    if n == 0 {
        return McNemarResult {
            b,
            c,
            method: McNemarMethod::ExactBinomial,
            statistic: 0.0,
            p_value: 1.0,
            degenerate: true,
        };
    }
    if n < EXACT_THRESHOLD {
        McNemarResult {
            b,
            c,
            method: McNemarMethod::ExactBinomial,
            statistic: b.min(c) as f64,
            p_value: binomial_two_sided(b, n),
            degenerate: false,
        }
    } else {
        let diff = (b as f64 - c as f64).abs() - 1.0;
        let x = diff.max(0.0) * diff.max(0.0) / n as f64;
        McNemarResult {
            b,
            c,
            method: McNemarMethod::ChiSquareCorrected,
            statistic: x,
            p_value: libm::erfc(libm::sqrt(x / 2.0)).min(1.0),
            degenerate: false,
        }
    }
}

/// Paired comparison of two classifiers evaluated on the same examples.
pub fn mcnemar_test<L: PartialEq>(y_true: &[L], preds_a: &[L], preds_b: &[L]) -> Result<McNemarResult, MetricsError> {
    if y_true.len() != preds_a.len() || y_true.len() != preds_b.len() {
        return Err(MetricsError::LengthMismatch {
            truth: y_true.len(),
            predicted: preds_a.len().max(preds_b.len()),
        });
    }
    let mut b = 0;
    let mut c = 0;
    for ((t, a), bb) in y_true.iter().zip(preds_a).zip(preds_b) {
        match (a == t, bb == t) {
            (true, false) => b += 1,
            (false, true) => c += 1,
            _ => {}
        }
    }
    Ok(mcnemar_from_counts(b, c))
}
