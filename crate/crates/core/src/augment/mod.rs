//! Synthetic data generation and the zero-shot baseline.
//!
//! Generation goes through the [`GenerativeClient`] trait. Responses are
//! validated structurally before they become training rows, and every request
//! carries a content hash so a [`CachedClient`] can replay runs offline.

mod client;
mod plan;
mod prompt;
mod response;
mod run;
mod zero_shot;

pub use client::{CacheStats, CacheStore, CachedClient, ClientError, GenerativeClient, MemoryCache};
pub use plan::{extra_variations, plan_minority_boost, BoostPlan, DEFAULT_RHO};
pub use prompt::{
    build_augmentation_prompt, cache_key, label_definitions, render_snippet, GenerationRequest,
    GenerationSettings, AUGMENTATION_TEMPERATURE, ZERO_SHOT_TEMPERATURE,
};
pub use response::{parse_variations, Rejection, Variation};
pub use run::{
    run_augmentation, AugmentConfig, AugmentedSet, FailedRequest, SyntheticExample, MAX_ATTEMPTS,
};
pub use zero_shot::{
    build_zero_shot_prompt, parse_zero_shot, zero_shot_classify, Exemplar, ExemplarBank,
    ZeroShotAnswer, ZeroShotPrediction, EXEMPLARS_PER_CLASS,
};

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::corpus::UtteranceRef;

#[derive(Debug, thiserror::Error)]
pub enum AugmentError {
    #[error("target ratio must lie in (0, 1], got {0}")]
    InvalidRho(f64),
    #[error("training set has no labelled utterances")]
    EmptyTrain,
    #[error("expansion factor must be a finite non-negative number, got {0}")]
    InvalidScale(f64),
    #[error("target {0:?} lacks a UT or RC label")]
    UnlabeledTarget(UtteranceRef),
    #[error("at least one variation must be requested")]
    ZeroVariations,
    #[error("{} request(s) failed after retries", failed.len())]
    Partial {
        set: Box<AugmentedSet>,
        failed: Vec<FailedRequest>,
    },
}
