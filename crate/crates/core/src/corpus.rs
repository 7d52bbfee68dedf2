//! Utterances, sessions, context windows and label distributions.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::taxonomy::{remap_rc, Code, Rc4, Rc6, SpeakerRole, UtteranceType};

/// Where a labelled row came from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    #[default]
    Human,
    Synthetic,
    Pseudo,
}

/// One speaker turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub session_id: String,
    pub turn_index: usize,
    pub speaker: SpeakerRole,
    pub text: String,
    pub ut: Option<UtteranceType>,
    pub rc6: Option<Rc6>,
    pub rc4: Option<Rc4>,
    #[serde(default)]
    pub provenance: Provenance,
    /// Classifier confidence for `ut`, present on pseudo-labelled rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ut_confidence: Option<f64>,
    /// Classifier confidence for `rc4`, present on pseudo-labelled rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rc_confidence: Option<f64>,
    /// Seconds from the start of the session, when the transcript has times.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<f64>,
}

impl Utterance {
    pub fn new(
        session_id: impl Into<String>,
        turn_index: usize,
        speaker: SpeakerRole,
        text: impl Into<String>,
    ) -> Self {
        Utterance {
            session_id: session_id.into(),
            turn_index,
            speaker,
            text: text.into(),
            ut: None,
            rc6: None,
            rc4: None,
            provenance: Provenance::Human,
            ut_confidence: None,
            rc_confidence: None,
            timestamp: None,
        }
    }

    pub fn with_ut(mut self, ut: UtteranceType) -> Self {
        self.ut = Some(ut);
        self
    }

    /// Sets the six-class label and the derived four-class label.
    pub fn with_rc6(mut self, rc6: Rc6) -> Self {
        self.rc6 = Some(rc6);
        self.rc4 = Some(remap_rc(rc6));
        self
    }

    pub fn with_rc4(mut self, rc4: Rc4) -> Self {
        self.rc4 = Some(rc4);
        self
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn cci(&self) -> Option<u8> {
        self.rc4.map(Rc4::cci_weight)
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.ut.is_some() && self.rc4.is_some()
    }

    pub fn reference(&self) -> UtteranceRef {
        UtteranceRef {
            session_id: self.session_id.clone(),
            turn_index: self.turn_index,
        }
    }
}

/// Identifies an utterance within a corpus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UtteranceRef {
    pub session_id: String,
    pub turn_index: usize,
}

/// An ordered, dense sequence of utterances from one class session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub utterances: Vec<Utterance>,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

impl Session {
    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    /// The window around turn `index` with radius `k`, truncated at the edges.
    pub fn window(&self, index: usize, k: usize) -> ContextWindow<'_> {
        let start = index.saturating_sub(k);
        let end = index.saturating_add(k).saturating_add(1).min(self.utterances.len());
        ContextWindow {
            target: &self.utterances[index],
            before: &self.utterances[start..index],
            after: &self.utterances[index + 1..end],
            k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    UnknownLabel,
    MalformedRecord,
    SpeakerMismatch,
    EmptyText,
    Rc4Mismatch,
}

/// A non-fatal problem found while loading or validating a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub line: Option<usize>,
    pub session_id: Option<String>,
    pub turn_index: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("duplicate turn {turn_index} in session `{session_id}`")]
    DuplicateTurn { session_id: String, turn_index: usize },
    #[error("session `{session_id}` is not contiguous: expected turn {expected}, found {found}")]
    NonContiguous {
        session_id: String,
        expected: usize,
        found: usize,
    },
    #[error("no utterance carries a {scheme} label")]
    EmptyDistribution { scheme: &'static str },
}

/// Sessions plus the diagnostics raised while assembling them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub sessions: Vec<Session>,
    pub diagnostics: Vec<Diagnostic>,
}

impl Corpus {
    pub fn utterances(&self) -> impl Iterator<Item = &Utterance> {
        self.sessions.iter().flat_map(|s| s.utterances.iter())
    }
}

/// Groups utterances into sessions (in order of first appearance), sorts turns,
/// and validates the per-session invariants.
///
/// Duplicate or missing turn indices are hard errors. `rc4` is re-derived from
/// `rc6` whenever the latter is present; speaker/label conflicts and blank
/// text are reported as diagnostics and the rows are kept.
pub fn assemble_sessions(utterances: Vec<Utterance>) -> Result<Corpus, CorpusError> {
    let mut order: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, Vec<Utterance>> = BTreeMap::new();
    for u in utterances {
        if !groups.contains_key(&u.session_id) {
            order.push(u.session_id.clone());
        }
        groups.entry(u.session_id.clone()).or_default().push(u);
    }

    let mut diagnostics = Vec::new();
    let mut sessions = Vec::with_capacity(order.len());
    for id in order {
        let mut turns = groups.remove(&id).unwrap_or_default();
        turns.sort_by_key(|u| u.turn_index);
        for (expected, u) in turns.iter().enumerate() {
            if expected > 0 && turns[expected - 1].turn_index == u.turn_index {
                return Err(CorpusError::DuplicateTurn {
                    session_id: id,
                    turn_index: u.turn_index,
                });
            }
            if u.turn_index != expected {
                return Err(CorpusError::NonContiguous {
                    session_id: id,
                    expected,
                    found: u.turn_index,
                });
            }
        }
        for u in &mut turns {
            validate_utterance(u, &mut diagnostics);
        }
        sessions.push(Session {
            session_id: id,
            utterances: turns,
            metadata: BTreeMap::new(),
        });
    }
    Ok(Corpus {
        sessions,
        diagnostics,
    })
}

fn validate_utterance(u: &mut Utterance, diagnostics: &mut Vec<Diagnostic>) {
    let mut push = |kind, message: String| {
        diagnostics.push(Diagnostic {
            kind,
            line: None,
            session_id: Some(u.session_id.clone()),
            turn_index: Some(u.turn_index),
            message,
        })
    };
    if let Some(rc6) = u.rc6 {
        let derived = remap_rc(rc6);
        if let Some(given) = u.rc4 {
            if given != derived {
                push(
                    DiagnosticKind::Rc4Mismatch,
                    format!("rc4 {given} disagrees with rc6 {rc6}; using {derived}"),
                );
            }
        }
        u.rc4 = Some(derived);
    }
    if let Some(ut) = u.ut {
        if !ut.allows(u.speaker) {
            push(
                DiagnosticKind::SpeakerMismatch,
                format!("{ut} is not expected from a {}", u.speaker),
            );
        }
    }
    if u.text.trim().is_empty() {
        push(DiagnosticKind::EmptyText, "utterance text is blank".into());
    }
}

/// A target utterance with up to `k` neighbours on each side, all from the
/// same session.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextWindow<'a> {
    pub target: &'a Utterance,
    pub before: &'a [Utterance],
    pub after: &'a [Utterance],
    pub k: usize,
}

/// Number of context turns on each side of a window's target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowShape {
    pub before: usize,
    pub after: usize,
}

impl WindowShape {
    pub fn len(&self) -> usize {
        self.before + 1 + self.after
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl<'a> ContextWindow<'a> {
    pub fn shape(&self) -> WindowShape {
        WindowShape {
            before: self.before.len(),
            after: self.after.len(),
        }
    }

    /// All turns in order: before, target, after.
    pub fn turns(&self) -> impl Iterator<Item = &'a Utterance> + 'a {
        let target = core::iter::once(self.target);
        self.before.iter().chain(target).chain(self.after.iter())
    }

    pub fn context(&self) -> impl Iterator<Item = &'a Utterance> + 'a {
        self.before.iter().chain(self.after.iter())
    }
}

/// One window per utterance, in turn order.
pub fn build_context_windows(session: &Session, k: usize) -> Vec<ContextWindow<'_>> {
    (0..session.utterances.len())
        .map(|i| session.window(i, k))
        .collect()
}

/// The classification task whose labels a computation reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "UT")]
    Ut,
    #[serde(rename = "RC4")]
    Rc4,
}

/// A code type that can be read off an utterance.
pub trait TaskLabel: Code {
    const TASK: Task;
    fn of(utterance: &Utterance) -> Option<Self>;
}

impl TaskLabel for UtteranceType {
    const TASK: Task = Task::Ut;
    fn of(utterance: &Utterance) -> Option<Self> {
        utterance.ut
    }
}

impl TaskLabel for Rc4 {
    const TASK: Task = Task::Rc4;
    fn of(utterance: &Utterance) -> Option<Self> {
        utterance.rc4
    }
}

/// Label counts over a fixed label set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDistribution<L: Ord> {
    pub counts: BTreeMap<L, u64>,
    /// Observations without a label; they are excluded from `counts`.
    #[serde(default)]
    pub unlabeled: u64,
}

impl<L: Code> LabelDistribution<L> {
    /// A distribution over the whole code set with every count at zero.
    pub fn empty() -> Self {
        LabelDistribution {
            counts: L::ALL.iter().map(|&l| (l, 0)).collect(),
            unlabeled: 0,
        }
    }

    pub fn from_labels<I: IntoIterator<Item = Option<L>>>(labels: I) -> Self {
        let mut d = Self::empty();
        for label in labels {
            d.observe(label);
        }
        d
    }

    pub fn observe(&mut self, label: Option<L>) {
        match label {
            Some(l) => *self.counts.entry(l).or_insert(0) += 1,
            None => self.unlabeled += 1,
        }
    }
}

impl<L: Ord + Copy> LabelDistribution<L> {
    pub fn from_counts(counts: BTreeMap<L, u64>) -> Self {
        LabelDistribution {
            counts,
            unlabeled: 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn count(&self, label: L) -> u64 {
        self.counts.get(&label).copied().unwrap_or(0)
    }

    /// `counts[l] / total`, or `None` when nothing is labelled.
    pub fn proportion(&self, label: L) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| self.count(label) as f64 / total as f64)
    }

    pub fn proportions(&self) -> BTreeMap<L, f64> {
        let total = self.total();
        self.counts
            .iter()
            .map(|(&l, &c)| {
                let p = if total == 0 { 0.0 } else { c as f64 / total as f64 };
                (l, p)
            })
            .collect()
    }

    pub fn merge(&mut self, other: &Self) {
        for (&l, &c) in &other.counts {
            *self.counts.entry(l).or_insert(0) += c;
        }
        self.unlabeled += other.unlabeled;
    }
}

/// Label distribution of one task over the labelled utterances.
pub fn corpus_stats<'a, L, I>(utterances: I) -> Result<LabelDistribution<L>, CorpusError>
where
    L: TaskLabel,
    I: IntoIterator<Item = &'a Utterance>,
{
    let d = LabelDistribution::from_labels(utterances.into_iter().map(L::of));
    if d.total() == 0 {
        return Err(CorpusError::EmptyDistribution { scheme: L::SCHEME });
    }
    Ok(d)
}
