//! Train/val/test partitioning.
//!
//! The main entry point, [`exhaustive_session_split`], assigns whole sessions
//! to splits so that no context window can straddle a partition. It scores
//! every assignment that matches the requested ratio by the sum, over the three
//! splits, of the Jensen-Shannon divergence between the split's label
//! distribution and the corpus distribution, and returns the minimum.
//!
//! Divergences use base-2 logarithms, so each term lies in `[0, 1]`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{ContextWindow, LabelDistribution, Session, TaskLabel, Utterance};
use crate::taxonomy::{Code, Rc4, UtteranceType};

/// Upper bound on the number of sessions accepted by the exhaustive search.
pub const MAX_EXHAUSTIVE_SESSIONS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which label distribution the split objective compares.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitTask {
    #[default]
    #[serde(rename = "RC4")]
    Rc4,
    #[serde(rename = "UT")]
    Ut,
    /// Mean of the UT and RC4 objectives.
    Joint,
}

impl SplitTask {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitTask::Rc4 => "RC4",
            SplitTask::Ut => "UT",
            SplitTask::Joint => "Joint",
        }
    }
}

/// Session counts for train, val and test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SplitRatio(pub [usize; 3]);

impl SplitRatio {
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Number of distinct assignments: `n! / (a! b! c!)`.
    pub fn multinomial(&self) -> u128 {
        let [a, b, _] = self.0;
        let n = self.total();
        binomial(n, a) * binomial(n - a, b)
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SplitError {
    #[error("label sets differ between the two distributions")]
    LabelSetMismatch,
    #[error("distribution has no observations")]
    EmptyDistribution,
    #[error("ratio {ratio:?} needs {needed} sessions, corpus has {found}")]
    RatioMismatch {
        ratio: [usize; 3],
        needed: usize,
        found: usize,
    },
    #[error("every ratio part must be at least 1, got {0:?}")]
    ZeroRatioPart([usize; 3]),
    #[error("exhaustive search supports at most {MAX_EXHAUSTIVE_SESSIONS} sessions, got {0}")]
    TooManySessions(usize),
    #[error("session `{0}` has no label for the split task")]
    UnlabeledSession(String),
    #[error("fractions must be non-negative and sum to 1, got {0:?}")]
    InvalidFractions([f64; 3]),
    #[error("nothing to split")]
    EmptyInput,
    #[error("turn {turn_index} of session `{session_id}` is not assigned to any split")]
    Unassigned { session_id: String, turn_index: usize },
}

/// Jensen-Shannon divergence with base-2 logarithms.
///
/// Both distributions must be defined over the same label set and have at
/// least one observation. Zero-probability terms contribute nothing.
pub fn js_divergence<L: Ord + Copy>(
    p: &LabelDistribution<L>,
    q: &LabelDistribution<L>,
) -> Result<f64, SplitError> {
    if !p.counts.keys().eq(q.counts.keys()) {
        return Err(SplitError::LabelSetMismatch);
    }
    let (tp, tq) = (p.total(), q.total());
    if tp == 0 || tq == 0 {
        return Err(SplitError::EmptyDistribution);
    }
    let pv = p.counts.values().map(|&c| c as f64 / tp as f64);
    let qv = q.counts.values().map(|&c| c as f64 / tq as f64);
    Ok(js_from_probabilities(pv, qv))
}

fn js_from_probabilities(p: impl Iterator<Item = f64>, q: impl Iterator<Item = f64>) -> f64 {
    let mut acc = 0.0;
    for (a, b) in p.zip(q) {
        let m = 0.5 * (a + b);
        if a > 0.0 {
            acc += 0.5 * a * libm::log2(a / m);
        }
        if b > 0.0 {
            acc += 0.5 * b * libm::log2(b / m);
        }
    }
    acc.clamp(0.0, 1.0)
}

/// A whole-session partition and its score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
    pub objective: f64,
    pub ratio: SplitRatio,
    pub task: SplitTask,
}

impl SplitAssignment {
    pub fn ids(&self, split: Split) -> &[String] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn split_of_session(&self, session_id: &str) -> Option<Split> {
        Split::ALL.into_iter().find(|&s| {
            self.ids(s)
                .binary_search_by(|id| id.as_str().cmp(session_id))
                .is_ok()
        })
    }

    /// Sessions of one split, in corpus order.
    pub fn sessions<'a>(&'a self, sessions: &'a [Session], split: Split) -> impl Iterator<Item = &'a Session> + 'a {
        sessions
            .iter()
            .filter(move |s| self.split_of_session(&s.session_id) == Some(split))
    }

    fn tie_key(&self) -> (&[String], &[String]) {
        (&self.train, &self.val)
    }
}

/// Per-session label counts for both tasks, indexed by code position.
#[derive(Clone)]
struct SessionCounts {
    ut: [u64; 10],
    rc: [u64; 4],
}

impl SessionCounts {
    fn of(session: &Session) -> Self {
        let mut c = SessionCounts {
            ut: [0; 10],
            rc: [0; 4],
        };
        for u in &session.utterances {
            if let Some(ut) = u.ut {
                c.ut[ut.index()] += 1;
            }
            if let Some(rc) = u.rc4 {
                c.rc[rc.index()] += 1;
            }
        }
        c
    }

    fn labeled(&self, task: SplitTask) -> bool {
        let ut = self.ut.iter().any(|&c| c > 0);
        let rc = self.rc.iter().any(|&c| c > 0);
        match task {
            SplitTask::Rc4 => rc,
            SplitTask::Ut => ut,
            SplitTask::Joint => ut && rc,
        }
    }
}

fn js_counts(a: &[u64], b: &[u64]) -> Result<f64, SplitError> {
    let ta: u64 = a.iter().sum();
    let tb: u64 = b.iter().sum();
    if ta == 0 || tb == 0 {
        return Err(SplitError::EmptyDistribution);
    }
    Ok(js_from_probabilities(
        a.iter().map(|&c| c as f64 / ta as f64),
        b.iter().map(|&c| c as f64 / tb as f64),
    ))
}

/// Divergence of one group of sessions from the corpus.
fn group_objective(
    counts: &[SessionCounts],
    group: &[usize],
    corpus: &SessionCounts,
    task: SplitTask,
) -> Result<f64, SplitError> {
    let agg = corpus_counts_of(group.iter().map(|&i| &counts[i]));
    Ok(match task {
        SplitTask::Rc4 => js_counts(&agg.rc, &corpus.rc)?,
        SplitTask::Ut => js_counts(&agg.ut, &corpus.ut)?,
        SplitTask::Joint => 0.5 * (js_counts(&agg.ut, &corpus.ut)? + js_counts(&agg.rc, &corpus.rc)?),
    })
}

/// Objective of assigning `groups[j]` (session indices) to split `j`.
fn objective_of(
    counts: &[SessionCounts],
    groups: &[&[usize]; 3],
    corpus: &SessionCounts,
    task: SplitTask,
) -> Result<f64, SplitError> {
    groups
        .iter()
        .map(|g| group_objective(counts, g, corpus, task))
        .sum()
}

fn corpus_counts(counts: &[SessionCounts]) -> SessionCounts {
    corpus_counts_of(counts.iter())
}

fn corpus_counts_of<'a>(counts: impl Iterator<Item = &'a SessionCounts>) -> SessionCounts {
    let mut total = SessionCounts {
        ut: [0; 10],
        rc: [0; 4],
    };
    for c in counts {
        for (a, b) in total.ut.iter_mut().zip(c.ut.iter()) {
            *a += b;
        }
        for (a, b) in total.rc.iter_mut().zip(c.rc.iter()) {
            *a += b;
        }
    }
    total
}

/// Lexicographic k-combinations of `0..n`.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn validate_sessions(sessions: &[Session], ratio: SplitRatio, task: SplitTask) -> Result<Vec<SessionCounts>, SplitError> {
    if ratio.0.contains(&0) {
        return Err(SplitError::ZeroRatioPart(ratio.0));
    }
    if sessions.len() != ratio.total() {
        return Err(SplitError::RatioMismatch {
            ratio: ratio.0,
            needed: ratio.total(),
            found: sessions.len(),
        });
    }
    if sessions.len() > MAX_EXHAUSTIVE_SESSIONS {
        return Err(SplitError::TooManySessions(sessions.len()));
    }
    let counts: Vec<SessionCounts> = sessions.iter().map(SessionCounts::of).collect();
    for (s, c) in sessions.iter().zip(&counts) {
        if !c.labeled(task) {
            return Err(SplitError::UnlabeledSession(s.session_id.clone()));
        }
    }
    Ok(counts)
}

fn sorted_ids(sessions: &[Session], idx: &[usize]) -> Vec<String> {
    let mut ids: Vec<String> = idx.iter().map(|&i| sessions[i].session_id.clone()).collect();
    ids.sort();
    ids
}

/// Scores every session assignment matching `ratio`, in enumeration order.
pub fn enumerate_session_splits(
    sessions: &[Session],
    ratio: SplitRatio,
    task: SplitTask,
) -> Result<Vec<SplitAssignment>, SplitError> {
    let counts = validate_sessions(sessions, ratio, task)?;
    let corpus = corpus_counts(&counts);
    let n = sessions.len();
    let [a, b, _] = ratio.0;
    let mut out = Vec::new();
    for train in combinations(n, a) {
        let rest: Vec<usize> = (0..n).filter(|i| !train.contains(i)).collect();
        for val_pos in combinations(rest.len(), b) {
            let val: Vec<usize> = val_pos.iter().map(|&p| rest[p]).collect();
            let test: Vec<usize> = rest.iter().copied().filter(|i| !val.contains(i)).collect();
            let objective = objective_of(&counts, &[&train, &val, &test], &corpus, task)?;
            out.push(SplitAssignment {
                train: sorted_ids(sessions, &train),
                val: sorted_ids(sessions, &val),
                test: sorted_ids(sessions, &test),
                objective,
                ratio,
                task,
            });
        }
    }
    Ok(out)
}

/// The minimum-objective whole-session assignment.
///
/// Ties are broken by the lexicographically smallest sorted train ids, then
/// val ids, after the full enumeration.
pub fn exhaustive_session_split(
    sessions: &[Session],
    ratio: SplitRatio,
    task: SplitTask,
) -> Result<SplitAssignment, SplitError> {
    let candidates = enumerate_session_splits(sessions, ratio, task)?;
    candidates
        .into_iter()
        .reduce(|best, c| {
            let better = c.objective < best.objective
                || (c.objective == best.objective && c.tie_key() < best.tie_key());
            if better {
                c
            } else {
                best
            }
        })
        .ok_or(SplitError::EmptyInput)
}

fn check_fractions(fractions: [f64; 3]) -> Result<(), SplitError> {
    let sum: f64 = fractions.iter().sum();
    if fractions.iter().any(|f| !(f.is_finite() && *f >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(SplitError::InvalidFractions(fractions));
    }
    Ok(())
}

/// Greedy iterative stratification over items carrying label sets.
///
/// Repeatedly takes the label with the fewest remaining items and sends each
/// of its items to the split with the largest remaining demand for that label
/// (ties: largest overall demand, then train before val before test). Items
/// without labels go to the split with the largest overall demand.
pub fn iterative_stratification<L: Ord + Copy>(
    items: &[Vec<L>],
    fractions: [f64; 3],
) -> Result<Vec<Split>, SplitError> {
    check_fractions(fractions)?;
    if items.is_empty() {
        return Err(SplitError::EmptyInput);
    }
    let item_labels: Vec<BTreeSet<L>> = items.iter().map(|l| l.iter().copied().collect()).collect();
    let mut per_label: BTreeMap<L, Vec<usize>> = BTreeMap::new();
    for (i, labels) in item_labels.iter().enumerate() {
        for &l in labels {
            per_label.entry(l).or_default().push(i);
        }
    }
    let mut demand: [f64; 3] = core::array::from_fn(|j| fractions[j] * items.len() as f64);
    let mut label_demand: BTreeMap<L, [f64; 3]> = per_label
        .iter()
        .map(|(&l, v)| (l, core::array::from_fn(|j| fractions[j] * v.len() as f64)))
        .collect();

    let mut assigned: Vec<Option<Split>> = vec![None; items.len()];
    let mut remaining = items.len();
    let pick = |scores: &[f64; 3], tiebreak: &[f64; 3]| -> usize {
        let mut best = 0;
        for j in 1..3 {
            if scores[j] > scores[best] || (scores[j] == scores[best] && tiebreak[j] > tiebreak[best]) {
                best = j;
            }
        }
        best
    };

    while remaining > 0 {
        let next = per_label
            .iter()
            .map(|(&l, v)| (l, v.iter().filter(|&&i| assigned[i].is_none()).count()))
            .filter(|&(_, c)| c > 0)
            .min_by_key(|&(_, c)| c);
        let Some((label, _)) = next else {
            break;
        };
        let members: Vec<usize> = per_label[&label]
            .iter()
            .copied()
            .filter(|&i| assigned[i].is_none())
            .collect();
        for i in members {
            let j = pick(&label_demand[&label], &demand);
            assigned[i] = Some(Split::ALL[j]);
            remaining -= 1;
            demand[j] -= 1.0;
            for l in &item_labels[i] {
                if let Some(d) = label_demand.get_mut(l) {
                    d[j] -= 1.0;
                }
            }
        }
    }
    for slot in assigned.iter_mut().filter(|s| s.is_none()) {
        let j = pick(&demand, &[0.0; 3]);
        *slot = Some(Split::ALL[j]);
        demand[j] -= 1.0;
    }
    Ok(assigned.into_iter().map(|s| s.unwrap_or(Split::Train)).collect())
}

/// A row-level partition and its divergence objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowPartition {
    pub assignment: Vec<Split>,
    pub objective: f64,
}

/// Objective of a row-level partition: sum over splits of JS(split, corpus).
pub fn row_partition_objective<L: Code>(rows: &[L], assignment: &[Split]) -> Result<f64, SplitError> {
    let corpus = LabelDistribution::from_labels(rows.iter().map(|&l| Some(l)));
    let mut total = 0.0;
    for split in Split::ALL {
        let d = LabelDistribution::from_labels(
            rows.iter()
                .zip(assignment)
                .filter(|(_, &s)| s == split)
                .map(|(&l, _)| Some(l)),
        );
        if d.total() > 0 {
            total += js_divergence(&d, &corpus)?;
        }
    }
    Ok(total)
}

/// Row-level iterative stratification of single-label rows.
///
/// Empty splits (possible only for tiny inputs) contribute nothing to the
/// objective.
pub fn iterative_stratified_split<L: Code>(rows: &[L], fractions: [f64; 3]) -> Result<RowPartition, SplitError> {
    let items: Vec<Vec<L>> = rows.iter().map(|&l| vec![l]).collect();
    let assignment = iterative_stratification(&items, fractions)?;
    let objective = row_partition_objective(rows, &assignment)?;
    Ok(RowPartition {
        assignment,
        objective,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum AnyLabel {
    Ut(UtteranceType),
    Rc(Rc4),
}

/// Iterative stratification with whole sessions as the items.
///
/// Each session is treated as a multi-label item carrying the set of labels
/// it contains. The returned assignment records the realised session counts
/// in `ratio` and is scored with the same objective as the exhaustive search.
pub fn iterative_session_split(
    sessions: &[Session],
    fractions: [f64; 3],
    task: SplitTask,
) -> Result<SplitAssignment, SplitError> {
    if sessions.is_empty() {
        return Err(SplitError::EmptyInput);
    }
    let counts: Vec<SessionCounts> = sessions.iter().map(SessionCounts::of).collect();
    for (s, c) in sessions.iter().zip(&counts) {
        if !c.labeled(task) {
            return Err(SplitError::UnlabeledSession(s.session_id.clone()));
        }
    }
    let items: Vec<Vec<AnyLabel>> = counts
        .iter()
        .map(|c| {
            let mut labels = Vec::new();
            if matches!(task, SplitTask::Ut | SplitTask::Joint) {
                labels.extend(UtteranceType::ALL.iter().filter(|u| c.ut[u.index()] > 0).map(|&u| AnyLabel::Ut(u)));
            }
            if matches!(task, SplitTask::Rc4 | SplitTask::Joint) {
                labels.extend(Rc4::ALL.iter().filter(|r| c.rc[r.index()] > 0).map(|&r| AnyLabel::Rc(r)));
            }
            labels
        })
        .collect();
    let assignment = iterative_stratification(&items, fractions)?;
    let groups: [Vec<usize>; 3] = core::array::from_fn(|j| {
        (0..sessions.len())
            .filter(|&i| assignment[i] == Split::ALL[j])
            .collect()
    });
    let corpus = corpus_counts(&counts);
    let mut objective = 0.0;
    for g in groups.iter().filter(|g| !g.is_empty()) {
        objective += group_objective(&counts, g, &corpus, task)?;
    }
    Ok(SplitAssignment {
        train: sorted_ids(sessions, &groups[0]),
        val: sorted_ids(sessions, &groups[1]),
        test: sorted_ids(sessions, &groups[2]),
        objective,
        ratio: SplitRatio([groups[0].len(), groups[1].len(), groups[2].len()]),
        task,
    })
}

/// Resolves the split a given utterance belongs to when it is a target.
pub trait SplitLookup {
    fn split_of(&self, utterance: &Utterance) -> Option<Split>;
}

impl SplitLookup for SplitAssignment {
    fn split_of(&self, utterance: &Utterance) -> Option<Split> {
        self.split_of_session(&utterance.session_id)
    }
}

/// A per-utterance assignment, as produced by row-level splitting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RowAssignment {
    pub rows: BTreeMap<(String, usize), Split>,
}

impl RowAssignment {
    pub fn insert(&mut self, utterance: &Utterance, split: Split) {
        self.rows
            .insert((utterance.session_id.clone(), utterance.turn_index), split);
    }
}

impl SplitLookup for RowAssignment {
    fn split_of(&self, utterance: &Utterance) -> Option<Split> {
        self.rows
            .get(&(utterance.session_id.clone(), utterance.turn_index))
            .copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakageViolation {
    pub session_id: String,
    pub target_turn: usize,
    pub context_turn: usize,
    pub target_split: Split,
    pub context_split: Split,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub violations: Vec<LeakageViolation>,
    pub count: usize,
}

/// Lists every context turn that, as a target, belongs to a different split
/// than the window it appears in.
pub fn audit_leakage<S: SplitLookup>(
    assignment: &S,
    windows: &[ContextWindow<'_>],
) -> Result<LeakageReport, SplitError> {
    let lookup = |u: &Utterance| {
        assignment.split_of(u).ok_or_else(|| SplitError::Unassigned {
            session_id: u.session_id.clone(),
            turn_index: u.turn_index,
        })
    };
    let mut violations = Vec::new();
    for w in windows {
        let target_split = lookup(w.target)?;
        for c in w.context() {
            let context_split = lookup(c)?;
            if context_split != target_split {
                violations.push(LeakageViolation {
                    session_id: w.target.session_id.clone(),
                    target_turn: w.target.turn_index,
                    context_turn: c.turn_index,
                    target_split,
                    context_split,
                });
            }
        }
    }
    let count = violations.len();
    Ok(LeakageReport { violations, count })
}

/// Splits sessions by an assignment, dropping non-human rows from val/test.
pub fn materialize<'a>(
    sessions: &'a [Session],
    assignment: &'a SplitAssignment,
    split: Split,
) -> Vec<&'a Utterance> {
    assignment
        .sessions(sessions, split)
        .flat_map(|s| s.utterances.iter())
        .filter(|u| split == Split::Train || u.provenance != crate::corpus::Provenance::Synthetic)
        .collect()
}

/// Distribution of one task within one split.
pub fn split_distribution<L: TaskLabel>(
    sessions: &[Session],
    assignment: &SplitAssignment,
    split: Split,
) -> LabelDistribution<L> {
    LabelDistribution::from_labels(materialize(sessions, assignment, split).into_iter().map(L::of))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{assemble_sessions, build_context_windows};
    use crate::taxonomy::SpeakerRole;
    use alloc::format;
    use proptest::prelude::*;

    fn dist(counts: &[(Rc4, u64)]) -> LabelDistribution<Rc4> {
        let mut d = LabelDistribution::<Rc4>::empty();
        for &(l, c) in counts {
            d.counts.insert(l, c);
        }
        d
    }

    /// Term-by-term evaluation of the definition, independent of the
    /// implementation's loop.
    fn js_literal(p: &[f64], q: &[f64]) -> f64 {
        let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| (a + b) / 2.0).collect();
        let kl = |x: &[f64]| -> f64 {
            x.iter()
                .zip(&m)
                .map(|(&xi, &mi)| if xi == 0.0 { 0.0 } else { xi * (xi / mi).ln() / core::f64::consts::LN_2 })
                .sum()
        };
        0.5 * kl(p) + 0.5 * kl(q)
    }

    #[test]
    fn identical_distributions_have_zero_divergence() {
        let p = dist(&[(Rc4::Srd, 3), (Rc4::O, 1)]);
        assert_eq!(js_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_supports_reach_one() {
        let p = dist(&[(Rc4::Er, 1)]);
        let q = dist(&[(Rc4::Srd, 1)]);
        assert!((js_divergence(&p, &q).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn half_vs_point_matches_literal_formula() {
        let p = dist(&[(Rc4::Er, 1), (Rc4::Srd, 1)]);
        let q = dist(&[(Rc4::Er, 1)]);
        let expected = js_literal(&[0.5, 0.5, 0.0, 0.0], &[1.0, 0.0, 0.0, 0.0]);
        // 0.75 log2(4/3) - 0.5 ... evaluated numerically: 0.31127812445913283
        assert!((expected - 0.311_278_124_459_132_8).abs() < 1e-12);
        assert!((js_divergence(&p, &q).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn mismatched_or_empty_distributions_are_errors() {
        let p = dist(&[(Rc4::Er, 1)]);
        let mut q = BTreeMap::new();
        q.insert(Rc4::Er, 1u64);
        let q = LabelDistribution::from_counts(q);
        assert_eq!(js_divergence(&p, &q), Err(SplitError::LabelSetMismatch));
        let e = LabelDistribution::<Rc4>::empty();
        assert_eq!(js_divergence(&p, &e), Err(SplitError::EmptyDistribution));
    }

    fn session(id: &str, labels: &[Rc4]) -> Session {
        let rows = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| Utterance::new(id, i, SpeakerRole::Student, format!("{id}-{i}")).with_rc4(l))
            .collect();
        assemble_sessions(rows).unwrap().sessions.remove(0)
    }

    #[test]
    fn identical_sessions_split_with_zero_objective() {
        let sessions: Vec<Session> = ["a", "b", "c"].iter().map(|id| session(id, &[Rc4::Srd])).collect();
        let s = exhaustive_session_split(&sessions, SplitRatio([1, 1, 1]), SplitTask::Rc4).unwrap();
        assert_eq!(s.objective, 0.0);
        assert_eq!(s.train, ["a"]);
        assert_eq!(s.val, ["b"]);
        assert_eq!(s.test, ["c"]);
    }

    #[test]
    fn candidate_count_matches_multinomial() {
        let sessions: Vec<Session> = (0..9).map(|i| session(&format!("s{i}"), &[Rc4::Srd, Rc4::O])).collect();
        let ratio = SplitRatio([6, 2, 1]);
        assert_eq!(ratio.multinomial(), 252);
        assert_eq!(enumerate_session_splits(&sessions, ratio, SplitTask::Rc4).unwrap().len(), 252);
        let ratio = SplitRatio([4, 3, 2]);
        assert_eq!(
            enumerate_session_splits(&sessions, ratio, SplitTask::Rc4).unwrap().len() as u128,
            ratio.multinomial()
        );
    }

    #[test]
    fn ratio_errors() {
        let sessions: Vec<Session> = (0..3).map(|i| session(&format!("s{i}"), &[Rc4::Srd])).collect();
        assert!(matches!(
            exhaustive_session_split(&sessions, SplitRatio([6, 2, 1]), SplitTask::Rc4),
            Err(SplitError::RatioMismatch { needed: 9, found: 3, .. })
        ));
        assert!(matches!(
            exhaustive_session_split(&sessions, SplitRatio([3, 0, 0]), SplitTask::Rc4),
            Err(SplitError::ZeroRatioPart(_))
        ));
        assert!(matches!(
            exhaustive_session_split(&sessions, SplitRatio([1, 1, 1]), SplitTask::Ut),
            Err(SplitError::UnlabeledSession(_))
        ));
    }

    #[test]
    fn balanced_rows_stratify_perfectly() {
        let rows: Vec<Rc4> = (0..40).map(|i| if i % 2 == 0 { Rc4::Srd } else { Rc4::O }).collect();
        let p = iterative_stratified_split(&rows, [0.5, 0.25, 0.25]).unwrap();
        assert!(p.objective.abs() < 1e-12);
        let train = p.assignment.iter().filter(|&&s| s == Split::Train).count();
        assert_eq!(train, 20);
    }

    #[test]
    fn single_label_rows_have_zero_objective() {
        let rows = [Rc4::Srd; 17];
        let p = iterative_stratified_split(&rows, [0.6, 0.2, 0.2]).unwrap();
        assert_eq!(p.objective, 0.0);
        assert!(iterative_stratified_split::<Rc4>(&[], [0.6, 0.2, 0.2]).is_err());
        assert!(iterative_stratified_split(&rows, [0.6, 0.2, 0.3]).is_err());
    }

    #[test]
    fn row_level_split_leaks_adjacent_turns() {
        let s = session("s", &[Rc4::Srd; 6]);
        let mut rows = RowAssignment::default();
        for u in &s.utterances {
            rows.insert(u, if u.turn_index == 4 { Split::Test } else { Split::Train });
        }
        let windows = build_context_windows(&s, 1);
        let report = audit_leakage(&rows, &windows).unwrap();
        assert!(report.count >= 1);
        assert_eq!(report.count, report.violations.len());
        assert!(report
            .violations
            .iter()
            .any(|v| v.target_turn == 3 && v.context_turn == 4));

        let bare = build_context_windows(&s, 0);
        assert_eq!(audit_leakage(&rows, &bare).unwrap().count, 0);
    }

    #[test]
    fn unassigned_session_is_an_error() {
        let s = session("zzz", &[Rc4::Srd; 2]);
        let a = SplitAssignment {
            train: alloc::vec!["a".into()],
            val: Vec::new(),
            test: Vec::new(),
            objective: 0.0,
            ratio: SplitRatio([1, 0, 0]),
            task: SplitTask::Rc4,
        };
        let w = build_context_windows(&s, 1);
        assert!(matches!(audit_leakage(&a, &w), Err(SplitError::Unassigned { .. })));
    }

    fn arb_dist() -> impl Strategy<Value = LabelDistribution<Rc4>> {
        proptest::collection::vec(0u64..50, 4)
            .prop_filter("non-empty", |v| v.iter().sum::<u64>() > 0)
            .prop_map(|v| dist(&[(Rc4::Er, v[0]), (Rc4::Srd, v[1]), (Rc4::Sri, v[2]), (Rc4::O, v[3])]))
    }

    proptest! {
        #[test]
        fn js_is_symmetric_and_bounded(p in arb_dist(), q in arb_dist()) {
            let a = js_divergence(&p, &q).unwrap();
            let b = js_divergence(&q, &p).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert_eq!(js_divergence(&p, &p).unwrap(), 0.0);
        }

        #[test]
        fn session_assignments_never_leak(
            lens in proptest::collection::vec(1usize..8, 3),
            k in 0usize..4,
        ) {
            let sessions: Vec<Session> = lens
                .iter()
                .enumerate()
                .map(|(i, &n)| session(&format!("s{i}"), &alloc::vec![Rc4::Srd; n]))
                .collect();
            let a = exhaustive_session_split(&sessions, SplitRatio([1, 1, 1]), SplitTask::Rc4).unwrap();
            for s in &sessions {
                let w = build_context_windows(s, k);
                prop_assert_eq!(audit_leakage(&a, &w).unwrap().count, 0);
            }
        }
    }
}
