use serde::{Deserialize, Serialize};

use super::BaselineError;

/// Default focusing parameter of the focal loss.
pub const DEFAULT_GAMMA: f64 = 2.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    CrossEntropy,
    Focal { gamma: f64 },
}

impl LossKind {
    pub fn gamma(self) -> f64 {
        match self {
            LossKind::CrossEntropy => 0.0,
            LossKind::Focal { gamma } => gamma,
        }
    }
}

/// `weight * (1 - p_t)^gamma * -ln(p_t)`.
pub fn focal_loss(p_t: f64, gamma: f64, weight: f64) -> Result<f64, BaselineError> {
    if !(p_t > 0.0 && p_t <= 1.0) {
        return Err(BaselineError::InvalidProbability(p_t));
    }
    if !(gamma >= 0.0) || !(weight > 0.0) {
        return Err(BaselineError::InvalidLossParameter { gamma, weight });
    }
    Ok(weight * focal_from_log(libm::log(p_t), gamma).0)
}

pub fn cross_entropy(p_t: f64, weight: f64) -> Result<f64, BaselineError> {
    focal_loss(p_t, 0.0, weight)
}

/// Unweighted loss and its logit coefficient from `log p_t`.
///
/// The derivative of the loss with respect to logit `k` is
/// `coef * (delta_kt - p_k)`.
pub(crate) fn focal_from_log(log_p: f64, gamma: f64) -> (f64, f64) {
    let p = libm::exp(log_p);
    let q = -libm::expm1(log_p);
    if gamma == 0.0 {
        return (-log_p, -1.0);
    }
    if q <= 0.0 {
        return (0.0, 0.0);
    }
    let qg = libm::pow(q, gamma);
    let loss = -qg * log_p;
    let coef = gamma * p * libm::pow(q, gamma - 1.0) * log_p - qg;
    (loss, coef)
}

/// Task-mixed objective `alpha * ut + (1 - alpha) * rc`.
pub fn joint_loss(alpha: f64, ut_loss: f64, rc_loss: f64) -> Result<f64, BaselineError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(BaselineError::InvalidAlpha(alpha));
    }
    Ok(alpha * ut_loss + (1.0 - alpha) * rc_loss)
}
