//! TF-IDF features and multinomial logistic regression.

mod logreg;
mod loss;
mod sparse;
mod tfidf;

pub use logreg::{
    inverse_frequency_weights, minimize, softmax, train_logreg, ClassWeighting, LinearModel,
    Objective, Parameters, Prediction, TrainConfig, TrainingLog,
};
pub use loss::{cross_entropy, focal_loss, joint_loss, LossKind, DEFAULT_GAMMA};
pub use sparse::SparseVector;
pub use tfidf::{fit_tfidf, tokenize, TfidfVocabulary, TokenizerConfig};

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::taxonomy::Code;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BaselineError {
    #[error("no document contains a token")]
    EmptyVocabulary,
    #[error("probability must lie in (0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("focal loss needs gamma >= 0 and weight > 0, got gamma {gamma}, weight {weight}")]
    InvalidLossParameter { gamma: f64, weight: f64 },
    #[error("task mix must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),
    #[error("l2 strength must be finite and non-negative, got {0}")]
    InvalidL2(f64),
    #[error("{features} feature rows but {labels} labels")]
    LengthMismatch { features: usize, labels: usize },
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("{examples} examples cannot cover {classes} classes")]
    TooFewExamples { examples: usize, classes: usize },
    #[error("row {row} has feature {index} but the model has {n_features} features")]
    FeatureOutOfRange {
        row: usize,
        index: usize,
        n_features: usize,
    },
    #[error("optimisation diverged at iteration {iteration} (step {step}, last objective {objective})")]
    Diverged {
        iteration: usize,
        step: f64,
        objective: f64,
    },
}

/// A vocabulary and a linear model trained on its features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextClassifier<L> {
    pub vocabulary: TfidfVocabulary,
    pub model: LinearModel<L>,
}

impl<L: Code> TextClassifier<L> {
    pub fn fit<S: AsRef<str>>(
        docs: &[S],
        labels: &[L],
        tokenizer: TokenizerConfig,
        config: &TrainConfig,
    ) -> Result<Self, BaselineError> {
        let vocabulary = fit_tfidf(docs, tokenizer)?;
        let x: Vec<SparseVector> = docs.iter().map(|d| vocabulary.transform(d.as_ref())).collect();
        let model = train_logreg(&x, labels, vocabulary.len(), config)?;
        Ok(TextClassifier { vocabulary, model })
    }

    pub fn predict(&self, doc: &str) -> Prediction<L> {
        self.model.predict(&self.vocabulary.transform(doc))
    }
}
