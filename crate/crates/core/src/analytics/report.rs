use alloc::borrow::Cow;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::format;

use serde::{Deserialize, Serialize};

use super::{
    aggregate_temporal_cci, cooccurrence, extract_tst_chains, framing_grid, lag_sequential, rank_chain_patterns,
    rq_triggers, session_cci, temporal_cci_by_time, AnalysisConfig, AnalyticsError, BinMode, CciScope, CciSeries,
    ChainPattern, Contingency, CooccurrenceTable, FramingGrid, RqTriggers, TransitionTable,
};
use crate::corpus::{Diagnostic, Session};
use crate::taxonomy::{Code, SpeakerRole};

/// Names of the analyses with plot output, in emission order.
pub const ANALYSES: [&str; 7] = [
    "cooccurrence",
    "session_cci",
    "temporal_cci",
    "lag_sequential",
    "chain_patterns",
    "framing_grid",
    "rq_triggers",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCci {
    pub session_id: String,
    pub all: Option<f64>,
    pub student: Option<f64>,
    pub labeled: usize,
    pub student_labeled: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscourseReport {
    pub config: AnalysisConfig,
    pub label_source: String,
    pub n_sessions: usize,
    pub n_utterances: usize,
    pub cooccurrence: CooccurrenceTable,
    pub session_cci: Vec<SessionCci>,
    pub temporal_all: CciSeries,
    pub temporal_student: CciSeries,
    pub lag: TransitionTable,
    pub n_chains: usize,
    pub chains: Vec<ChainPattern>,
    pub framing: FramingGrid,
    pub rq: RqTriggers,
    pub diagnostics: Vec<Diagnostic>,
}

/// One long-format plot record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotRow {
    pub keys: Vec<(String, String)>,
    pub value: Option<f64>,
    pub count: u64,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
}

impl PlotRow {
    fn new(keys: &[(&str, String)], value: Option<f64>, count: u64) -> Self {
        PlotRow {
            keys: keys.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            value,
            count,
            ci_lo: None,
            ci_hi: None,
        }
    }
}

/// Drops labels whose confidence falls below `threshold`. Labels without a
/// confidence are kept.
pub fn apply_confidence_threshold(sessions: &[Session], threshold: f64) -> Result<Vec<Session>, AnalyticsError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(AnalyticsError::InvalidThreshold);
    }
    let mut out = sessions.to_vec();
    for u in out.iter_mut().flat_map(|s| s.utterances.iter_mut()) {
        if u.ut_confidence.is_some_and(|c| c < threshold) {
            u.ut = None;
        }
        if u.rc_confidence.is_some_and(|c| c < threshold) {
            u.rc4 = None;
            u.rc6 = None;
        }
    }
    Ok(out)
}

/// Runs every analysis over `sessions`. `label_source` names the labels
/// (for example `human` or `pseudo`) and ends up in output file names.
pub fn analyze(sessions: &[Session], config: &AnalysisConfig, label_source: &str) -> Result<DiscourseReport, AnalyticsError> {
    let sessions: Cow<'_, [Session]> = match config.confidence_threshold {
        Some(t) => Cow::Owned(apply_confidence_threshold(sessions, t)?),
        None => Cow::Borrowed(sessions),
    };
    let sessions = &*sessions;
    let temporal = |scope| match config.bin_mode {
        BinMode::Turns => aggregate_temporal_cci(sessions, config.n_bins, scope),
        BinMode::Time => temporal_cci_by_time(sessions, config.n_bins, scope),
    };
    let temporal_all = temporal(CciScope::All)?;
    let temporal_student = temporal(CciScope::StudentOnly)?;

    let mut chains = Vec::new();
    let mut diagnostics = Vec::new();
    for s in sessions {
        let e = extract_tst_chains(s);
        chains.extend(e.chains);
        diagnostics.extend(e.diagnostics);
    }

    let session_cci = sessions
        .iter()
        .map(|s| SessionCci {
            session_id: s.session_id.clone(),
            all: session_cci(s, CciScope::All),
            student: session_cci(s, CciScope::StudentOnly),
            labeled: s.utterances.iter().filter(|u| u.rc4.is_some()).count(),
            student_labeled: s
                .utterances
                .iter()
                .filter(|u| u.rc4.is_some() && u.speaker == SpeakerRole::Student)
                .count(),
        })
        .collect();

    Ok(DiscourseReport {
        config: config.clone(),
        label_source: label_source.to_string(),
        n_sessions: sessions.len(),
        n_utterances: sessions.iter().map(Session::len).sum(),
        cooccurrence: cooccurrence(sessions.iter().flat_map(|s| s.utterances.iter())),
        session_cci,
        temporal_all,
        temporal_student,
        lag: lag_sequential(sessions),
        n_chains: chains.len(),
        chains: rank_chain_patterns(&chains, config.min_n, config.bootstrap_iters, config.seed)?,
        framing: framing_grid(&chains, config.min_count)?,
        rq: rq_triggers(sessions),
        diagnostics,
    })
}

fn table_rows<R: Code, C: Code>(t: &Contingency<R, C>, row_key: &str, col_key: &str) -> Vec<PlotRow> {
    let mut out = Vec::new();
    for (r, row) in t.rows.iter().enumerate() {
        for (c, col) in t.columns.iter().enumerate() {
            let value = (t.row_totals[r] > 0).then(|| t.conditional[r][c]);
            out.push(PlotRow::new(
                &[(row_key, row.code().to_string()), (col_key, col.code().to_string())],
                value,
                t.counts[r][c],
            ));
        }
    }
    out
}

impl DiscourseReport {
    /// Long-format rows for one of [`ANALYSES`]; `None` for an unknown name.
    pub fn plot_rows(&self, analysis: &str) -> Option<Vec<PlotRow>> {
        let rows = match analysis {
            "cooccurrence" => table_rows(&self.cooccurrence, "ut", "rc4"),
            "session_cci" => self
                .session_cci
                .iter()
                .flat_map(|s| {
                    [
                        PlotRow::new(
                            &[("session_id", s.session_id.clone()), ("scope", "all".into())],
                            s.all,
                            s.labeled as u64,
                        ),
                        PlotRow::new(
                            &[("session_id", s.session_id.clone()), ("scope", "student".into())],
                            s.student,
                            s.student_labeled as u64,
                        ),
                    ]
                })
                .collect(),
            "temporal_cci" => [&self.temporal_all, &self.temporal_student]
                .into_iter()
                .flat_map(|series| {
                    series.bins.iter().map(move |b| {
                        PlotRow::new(
                            &[("scope", series.scope.as_str().into()), ("bin", format!("{}", b.index))],
                            b.mean,
                            b.labeled as u64,
                        )
                    })
                })
                .collect(),
            "lag_sequential" => table_rows(&self.lag, "teacher_ut", "student_rc4"),
            "chain_patterns" => self
                .chains
                .iter()
                .map(|p| PlotRow {
                    ci_lo: Some(p.ci_lo),
                    ci_hi: Some(p.ci_hi),
                    ..PlotRow::new(&[("pattern", p.trigram.to_string())], Some(p.mean_cci), p.n as u64)
                })
                .collect(),
            "framing_grid" => self
                .framing
                .cells
                .iter()
                .map(|c| {
                    PlotRow::new(
                        &[
                            ("initiation", c.initiation.code().into()),
                            ("feedback", c.feedback.code().into()),
                        ],
                        c.mean_cci,
                        c.count as u64,
                    )
                })
                .collect(),
            "rq_triggers" => {
                let mut rows = table_rows(&self.rq.table, "teacher_ut", "student");
                for (r, row) in self.rq.table.rows.iter().enumerate() {
                    rows.push(PlotRow::new(
                        &[("teacher_ut", row.code().into()), ("student", "CCI".into())],
                        self.rq.mean_student_cci[r],
                        self.rq.table.row_totals[r],
                    ));
                }
                rows
            }
            _ => return None,
        };
        Some(rows)
    }

    /// All plot outputs, keyed as `<analysis>__<label source>`.
    pub fn plot_tables(&self) -> Vec<(String, Vec<PlotRow>)> {
        ANALYSES
            .iter()
            .map(|a| (format!("{a}__{}", self.label_source), self.plot_rows(a).unwrap_or_default()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{assemble_sessions, Utterance};
    use crate::taxonomy::{Rc4, UtteranceType};

    fn sessions() -> Vec<Session> {
        let rows = (0..12)
            .map(|i| {
                let (role, ut) = if i % 2 == 0 {
                    (SpeakerRole::Teacher, UtteranceType::Q)
                } else {
                    (SpeakerRole::Student, UtteranceType::Rs)
                };
                let mut u = Utterance::new(if i < 6 { "a" } else { "b" }, i % 6, role, "x")
                    .with_ut(ut)
                    .with_rc4(Rc4::Srd);
                u.rc_confidence = Some(if i == 1 { 0.2 } else { 0.9 });
                u
            })
            .collect();
        assemble_sessions(rows).unwrap().sessions
    }

    #[test]
    fn every_analysis_has_rows() {
        let config = AnalysisConfig {
            bootstrap_iters: 20,
            n_bins: 3,
            min_n: 1,
            ..AnalysisConfig::default()
        };
        let r = analyze(&sessions(), &config, "human").unwrap();
        let tables = r.plot_tables();
        assert_eq!(tables.len(), 7);
        assert!(tables.iter().all(|(_, rows)| !rows.is_empty()));
        assert_eq!(tables[4].0, "chain_patterns__human");
        assert!(r.plot_rows("nope").is_none());
    }

    #[test]
    fn threshold_drops_low_confidence_labels() {
        let s = sessions();
        let kept = apply_confidence_threshold(&s, 0.5).unwrap();
        assert!(kept[0].utterances[1].rc4.is_none());
        assert_eq!(kept[0].utterances[1].ut, Some(UtteranceType::Rs));
        assert!(kept[0].utterances[3].rc4.is_some());
        assert!(apply_confidence_threshold(&s, 1.5).is_err());
    }
}
