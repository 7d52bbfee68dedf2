//! Discourse analyses over labelled sessions.

mod cci;
mod chains;
mod compare;
mod cooccurrence;
mod framing;
mod lag;
mod report;
mod rq;
mod table;

use alloc::string::String;

use serde::{Deserialize, Serialize};

pub use cci::{
    aggregate_temporal_cci, bin_sizes, session_cci, temporal_cci, temporal_cci_by_time, CciBin, CciScope,
    CciSeries,
};
pub use chains::{extract_tst_chains, rank_chain_patterns, Chain, ChainExtraction, ChainPattern, Trigram};
pub use compare::{compare_label_sources, terminal_rebound, BinDelta, CellDelta, Divergence, PatternDelta};
pub use cooccurrence::{cooccurrence, CooccurrenceTable};
pub use framing::{framing_grid, FramingCell, FramingGrid, DEFAULT_MIN_COUNT};
pub use lag::{lag_sequential, TransitionTable};
pub use report::{analyze, apply_confidence_threshold, DiscourseReport, PlotRow, SessionCci, ANALYSES};
pub use rq::{rq_triggers, RqTriggers};
pub use table::Contingency;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalyticsError {
    #[error("number of bins must be at least 1")]
    InvalidBins,
    #[error("minimum pattern count must be at least 1")]
    InvalidMinN,
    #[error("bootstrap iterations must be at least 1")]
    InvalidIterations,
    #[error("minimum cell count must be at least 1")]
    InvalidMinCount,
    #[error("confidence threshold must lie in [0, 1]")]
    InvalidThreshold,
    #[error("reports were computed with different {field}")]
    ConfigMismatch { field: &'static str },
    #[error("utterance {turn_index} of session {session_id} has no timestamp")]
    MissingTimestamp { session_id: String, turn_index: usize },
}

/// How bins are laid over a session.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinMode {
    #[default]
    Turns,
    Time,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub n_bins: usize,
    pub bin_mode: BinMode,
    /// Minimum chains for a pattern to be ranked.
    pub min_n: usize,
    /// Framing cells below this count are masked.
    pub min_count: usize,
    pub bootstrap_iters: usize,
    pub seed: u64,
    /// Labels whose confidence is below this are treated as missing.
    pub confidence_threshold: Option<f64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            n_bins: 10,
            bin_mode: BinMode::Turns,
            min_n: 5,
            min_count: DEFAULT_MIN_COUNT,
            bootstrap_iters: 10_000,
            seed: 0,
            confidence_threshold: None,
        }
    }
}
