//! Core algorithms for coding and analysing science-classroom discourse.
//!
//! Everything in this crate is pure computation over in-memory data and builds
//! without `std` (only `alloc` is required). File formats, the command line and
//! the HTTP client for the generative service live in the `discourse` crate.
//!
//! Module map:
//!
//! * [`taxonomy`]: utterance-type and reasoning-component codes, the 6 to 4
//!   reasoning remap and cognitive-complexity weights.
//! * [`corpus`]: utterances, sessions, context windows and label distributions.
//! * [`split`]: session-level exhaustive split search, iterative stratification
//!   and the context-window leakage audit.
//! * [`augment`]: minority-boost planning, augmentation prompts, response
//!   validation, the augmentation driver and the zero-shot baseline.
//! * [`baseline`]: TF-IDF features, focal/cross-entropy losses and multinomial
//!   logistic regression.
//! * [`metrics`]: confusion matrices, classification reports, McNemar's test and
//!   k-fold cross-validation.
//! * [`analytics`]: co-occurrence, CCI, lag-sequential transitions, T-S-T chain
//!   mining with bootstrap intervals, teacher framing, Rq triggers and
//!   human-vs-pseudo comparison.
//! * [`fixtures`]: synthetic corpora shaped after the published tables.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod analytics;
pub mod augment;
pub mod baseline;
pub mod corpus;
pub mod fixtures;
pub mod metrics;
mod numeric;
pub mod split;
pub mod taxonomy;

pub use corpus::{ContextWindow, LabelDistribution, Provenance, Session, Utterance};
pub use taxonomy::{remap_rc, Code, Rc4, Rc6, SpeakerRole, UtteranceType};
