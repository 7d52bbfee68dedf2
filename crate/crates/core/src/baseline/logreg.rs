use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::loss::focal_from_log;
use super::{BaselineError, LossKind, SparseVector};
use crate::taxonomy::Code;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    None,
    #[default]
    InverseFrequency,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub l2: f64,
    pub loss: LossKind,
    pub class_weighting: ClassWeighting,
    pub max_iterations: usize,
    /// Training stops once an accepted step lowers the objective by less.
    pub tolerance: f64,
    /// Recorded with the model; initialisation is all zeros, so results do
    /// not depend on it.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            l2: 1e-3,
            loss: LossKind::CrossEntropy,
            class_weighting: ClassWeighting::InverseFrequency,
            max_iterations: 2000,
            tolerance: 1e-7,
            seed: 0,
        }
    }
}

/// `total / (num_classes * count_c)` for each class index.
pub fn inverse_frequency_weights(y: &[usize], n_classes: usize) -> Vec<f64> {
    let mut counts = vec![0u64; n_classes];
    for &c in y {
        counts[c] += 1;
    }
    counts
        .iter()
        .map(|&c| {
            if c == 0 {
                0.0
            } else {
                y.len() as f64 / (n_classes as f64 * c as f64)
            }
        })
        .collect()
}

/// Weights (row-major, classes x features) and per-class biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub n_classes: usize,
    pub n_features: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Parameters {
    pub fn zeros(n_classes: usize, n_features: usize) -> Self {
        Parameters {
            n_classes,
            n_features,
            weights: vec![0.0; n_classes * n_features],
            bias: vec![0.0; n_classes],
        }
    }

    pub fn row(&self, class: usize) -> &[f64] {
        &self.weights[class * self.n_features..(class + 1) * self.n_features]
    }

    fn scores(&self, x: &SparseVector) -> Vec<f64> {
        (0..self.n_classes).map(|k| x.dot(self.row(k)) + self.bias[k]).collect()
    }

    pub fn weight_norm(&self) -> f64 {
        libm::sqrt(self.weights.iter().map(|w| w * w).sum())
    }

    fn dot(&self, other: &Parameters) -> f64 {
        let w: f64 = self.weights.iter().zip(&other.weights).map(|(a, b)| a * b).sum();
        let b: f64 = self.bias.iter().zip(&other.bias).map(|(a, b)| a * b).sum();
        w + b
    }

    fn axpy(&self, step: f64, dir: &Parameters) -> Parameters {
        Parameters {
            n_classes: self.n_classes,
            n_features: self.n_features,
            weights: self.weights.iter().zip(&dir.weights).map(|(a, d)| a + step * d).collect(),
            bias: self.bias.iter().zip(&dir.bias).map(|(a, d)| a + step * d).collect(),
        }
    }

    fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

fn log_softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + libm::log(scores.iter().map(|s| libm::exp(s - max)).sum::<f64>());
    scores.iter().map(|s| s - lse).collect()
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    log_softmax(scores).into_iter().map(libm::exp).collect()
}

/// Weighted mean loss plus `l2 / 2 * ||W||^2` (biases are not penalised).
pub struct Objective<'a> {
    pub x: &'a [SparseVector],
    pub y: &'a [usize],
    pub class_weights: Vec<f64>,
    pub l2: f64,
    pub loss: LossKind,
}

impl Objective<'_> {
    pub fn value(&self, params: &Parameters) -> f64 {
        self.evaluate(params, false).0
    }

    pub fn value_and_gradient(&self, params: &Parameters) -> (f64, Parameters) {
        let (v, g) = self.evaluate(params, true);
        (v, g.unwrap_or_else(|| Parameters::zeros(params.n_classes, params.n_features)))
    }

    fn evaluate(&self, params: &Parameters, with_grad: bool) -> (f64, Option<Parameters>) {
        let n = self.x.len() as f64;
        let gamma = self.loss.gamma();
        let mut grad = with_grad.then(|| Parameters::zeros(params.n_classes, params.n_features));
        let mut total = 0.0;
        for (x, &t) in self.x.iter().zip(self.y) {
            let log_p = log_softmax(&params.scores(x));
            let w = self.class_weights[t];
            let (loss, coef) = focal_from_log(log_p[t], gamma);
            total += w * loss;
            if let Some(g) = grad.as_mut() {
                for k in 0..params.n_classes {
                    let delta = if k == t { 1.0 } else { 0.0 };
                    let c = w * coef * (delta - libm::exp(log_p[k])) / n;
                    if c == 0.0 {
                        continue;
                    }
                    g.bias[k] += c;
                    let row = &mut g.weights[k * params.n_features..(k + 1) * params.n_features];
                    for (i, v) in x.iter() {
                        if let Some(slot) = row.get_mut(i) {
                            *slot += c * v;
                        }
                    }
                }
            }
        }
        let penalty = 0.5 * self.l2 * params.weights.iter().map(|w| w * w).sum::<f64>();
        if let Some(g) = grad.as_mut() {
            for (gw, w) in g.weights.iter_mut().zip(&params.weights) {
                *gw += self.l2 * w;
            }
        }
        (total / n + penalty, grad)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub iterations: usize,
    pub converged: bool,
    pub final_objective: f64,
    /// Objective after each accepted step, starting with the initial value.
    pub objective_history: Vec<f64>,
}

const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-20;

/// Full-batch gradient descent with backtracking line search from zero.
pub fn minimize(objective: &Objective<'_>, n_classes: usize, n_features: usize, config: &TrainConfig) -> Result<(Parameters, TrainingLog), BaselineError> {
    let mut params = Parameters::zeros(n_classes, n_features);
    let (mut value, mut grad) = objective.value_and_gradient(&params);
    let mut history = vec![value];
    let mut step = 1.0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iterations {
        iterations += 1;
        let gg = grad.dot(&grad);
        if gg == 0.0 {
            converged = true;
            break;
        }
        let accepted = loop {
            let candidate = params.axpy(-step, &grad);
            let v = objective.value(&candidate);
            if v.is_nan() || !candidate.is_finite() {
                return Err(BaselineError::Diverged {
                    iteration: iterations,
                    step,
                    objective: value,
                });
            }
            if v <= value - ARMIJO_C * step * gg {
                break Some((candidate, v));
            }
            step *= 0.5;
            if step < MIN_STEP {
                break None;
            }
        };
        let Some((candidate, v)) = accepted else {
            converged = true;
            break;
        };
        let decrease = value - v;
        params = candidate;
        let (nv, ng) = objective.value_and_gradient(&params);
        value = nv;
        grad = ng;
        history.push(value);
        step *= 2.0;
        if decrease < config.tolerance {
            converged = true;
            break;
        }
    }
    if !value.is_finite() {
        return Err(BaselineError::Diverged {
            iteration: iterations,
            step,
            objective: value,
        });
    }
    Ok((
        params,
        TrainingLog {
            iterations,
            converged,
            final_objective: value,
            objective_history: history,
        },
    ))
}

/// A trained multinomial logistic-regression model over label type `L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel<L> {
    /// Classes seen in training, in code order; row `k` of the weights
    /// scores `classes[k]`.
    pub classes: Vec<L>,
    pub params: Parameters,
    pub class_weights: Vec<f64>,
    pub config: TrainConfig,
    pub log: TrainingLog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction<L> {
    pub label: L,
    pub probabilities: Vec<f64>,
}

impl<L> Prediction<L> {
    pub fn confidence(&self) -> f64 {
        self.probabilities.iter().copied().fold(0.0, f64::max)
    }
}

impl<L: Code> LinearModel<L> {
    pub fn predict(&self, x: &SparseVector) -> Prediction<L> {
        let probabilities = softmax(&self.params.scores(x));
        let mut best = 0;
        for (k, &p) in probabilities.iter().enumerate() {
            if p > probabilities[best] {
                best = k;
            }
        }
        Prediction {
            label: self.classes[best],
            probabilities,
        }
    }
}

pub fn train_logreg<L: Code>(
    x: &[SparseVector],
    y: &[L],
    n_features: usize,
    config: &TrainConfig,
) -> Result<LinearModel<L>, BaselineError> {
    if x.len() != y.len() {
        return Err(BaselineError::LengthMismatch {
            features: x.len(),
            labels: y.len(),
        });
    }
    if !(config.l2 >= 0.0) || !config.l2.is_finite() {
        return Err(BaselineError::InvalidL2(config.l2));
    }
    if let LossKind::Focal { gamma } = config.loss {
        if !(gamma >= 0.0) {
            return Err(BaselineError::InvalidLossParameter { gamma, weight: 1.0 });
        }
    }
    if let Some((row, index)) = x
        .iter()
        .enumerate()
        .find_map(|(r, v)| v.max_index().filter(|&i| i >= n_features).map(|i| (r, i)))
    {
        return Err(BaselineError::FeatureOutOfRange { row, index, n_features });
    }
    let classes: Vec<L> = L::ALL.iter().copied().filter(|c| y.contains(c)).collect();
    if classes.len() < 2 {
        return Err(BaselineError::SingleClass);
    }
    if y.len() < classes.len() {
        return Err(BaselineError::TooFewExamples {
            examples: y.len(),
            classes: classes.len(),
        });
    }
    let yi: Vec<usize> = y
        .iter()
        .map(|l| classes.iter().position(|c| c == l).unwrap_or(0))
        .collect();
    let class_weights = match config.class_weighting {
        ClassWeighting::None => vec![1.0; classes.len()],
        ClassWeighting::InverseFrequency => inverse_frequency_weights(&yi, classes.len()),
    };
    let objective = Objective {
        x,
        y: &yi,
        class_weights: class_weights.clone(),
        l2: config.l2,
        loss: config.loss,
    };
    let (params, log) = minimize(&objective, classes.len(), n_features, config)?;
    Ok(LinearModel {
        classes,
        params,
        class_weights,
        config: *config,
        log,
    })
}
