use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{AnalyticsError, CciScope, CciSeries, DiscourseReport, Trigram};
use crate::taxonomy::UtteranceType;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinDelta {
    pub scope: CciScope,
    pub index: usize,
    pub human: Option<f64>,
    pub pseudo: Option<f64>,
    /// `pseudo - human`, when both are defined.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternDelta {
    pub trigram: Trigram,
    pub human_n: usize,
    pub pseudo_n: usize,
    pub human: Option<f64>,
    pub pseudo: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDelta {
    pub initiation: UtteranceType,
    pub feedback: UtteranceType,
    pub human_count: usize,
    pub pseudo_count: usize,
    pub human: Option<f64>,
    pub pseudo: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub human_source: String,
    pub pseudo_source: String,
    pub bins: Vec<BinDelta>,
    pub patterns: Vec<PatternDelta>,
    pub cells: Vec<CellDelta>,
    pub human_rebound: Option<bool>,
    pub pseudo_rebound: Option<bool>,
    /// The human trajectory rises over its last two bins and the pseudo one does not.
    pub rebound_absent: bool,
    /// Mean of the last two pseudo bins sits below the human one.
    pub final_bins_lower: Option<bool>,
}

fn diff(human: Option<f64>, pseudo: Option<f64>) -> Option<f64> {
    Some(pseudo? - human?)
}

fn tail_mean(series: &CciSeries, skip_from_end: usize) -> Option<f64> {
    let n = series.bins.len();
    if n < skip_from_end + 2 {
        return None;
    }
    let a = series.bins[n - skip_from_end - 2].mean?;
    let b = series.bins[n - skip_from_end - 1].mean?;
    Some((a + b) / 2.0)
}

/// Whether the mean of the last two bins exceeds the mean of the two before.
/// `None` with fewer than four bins or an empty bin among them.
pub fn terminal_rebound(series: &CciSeries) -> Option<bool> {
    Some(tail_mean(series, 0)? > tail_mean(series, 2)?)
}

fn same_config(human: &DiscourseReport, pseudo: &DiscourseReport) -> Result<(), AnalyticsError> {
    let (h, p) = (&human.config, &pseudo.config);
    let checks = [
        ("n_bins", h.n_bins == p.n_bins),
        ("bin_mode", h.bin_mode == p.bin_mode),
        ("min_n", h.min_n == p.min_n),
        ("min_count", h.min_count == p.min_count),
        ("bootstrap_iters", h.bootstrap_iters == p.bootstrap_iters),
        ("seed", h.seed == p.seed),
    ];
    match checks.iter().find(|(_, ok)| !ok) {
        Some(&(field, _)) => Err(AnalyticsError::ConfigMismatch { field }),
        None => Ok(()),
    }
}

fn bin_deltas<'a>(human: &'a CciSeries, pseudo: &'a CciSeries) -> impl Iterator<Item = BinDelta> + 'a {
    human.bins.iter().zip(&pseudo.bins).map(move |(h, p)| BinDelta {
        scope: human.scope,
        index: h.index,
        human: h.mean,
        pseudo: p.mean,
        delta: diff(h.mean, p.mean),
    })
}

/// Differences between two reports over the same sessions, one from human
/// labels and one from predicted labels. The confidence threshold may
/// differ; every other analysis parameter must match.
pub fn compare_label_sources(human: &DiscourseReport, pseudo: &DiscourseReport) -> Result<Divergence, AnalyticsError> {
    same_config(human, pseudo)?;

    let mut bins: Vec<BinDelta> = bin_deltas(&human.temporal_all, &pseudo.temporal_all).collect();
    bins.extend(bin_deltas(&human.temporal_student, &pseudo.temporal_student));

    let mut pattern_rows: BTreeMap<Trigram, [Option<(usize, f64)>; 2]> = BTreeMap::new();
    for (side, report) in [human, pseudo].into_iter().enumerate() {
        for p in &report.chains {
            pattern_rows.entry(p.trigram).or_default()[side] = Some((p.n, p.mean_cci));
        }
    }
    let patterns = pattern_rows
        .into_iter()
        .map(|(trigram, [h, p])| {
            let (hm, pm) = (h.map(|x| x.1), p.map(|x| x.1));
            PatternDelta {
                trigram,
                human_n: h.map_or(0, |x| x.0),
                pseudo_n: p.map_or(0, |x| x.0),
                human: hm,
                pseudo: pm,
                delta: diff(hm, pm),
            }
        })
        .collect();

    let mut cell_rows: BTreeMap<(UtteranceType, UtteranceType), [(usize, Option<f64>); 2]> = BTreeMap::new();
    for (side, report) in [human, pseudo].into_iter().enumerate() {
        for c in &report.framing.cells {
            cell_rows.entry((c.initiation, c.feedback)).or_default()[side] = (c.count, c.mean_cci);
        }
    }
    let cells = cell_rows
        .into_iter()
        .map(|((initiation, feedback), [h, p])| CellDelta {
            initiation,
            feedback,
            human_count: h.0,
            pseudo_count: p.0,
            human: h.1,
            pseudo: p.1,
            delta: diff(h.1, p.1),
        })
        .collect();

    let human_rebound = terminal_rebound(&human.temporal_all);
    let pseudo_rebound = terminal_rebound(&pseudo.temporal_all);
    let final_bins_lower = match (tail_mean(&human.temporal_all, 0), tail_mean(&pseudo.temporal_all, 0)) {
        (Some(h), Some(p)) => Some(p < h),
        _ => None,
    };
    Ok(Divergence {
        human_source: human.label_source.clone(),
        pseudo_source: pseudo.label_source.clone(),
        bins,
        patterns,
        cells,
        human_rebound,
        pseudo_rebound,
        rebound_absent: human_rebound == Some(true) && pseudo_rebound != Some(true),
        final_bins_lower,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{analyze, AnalysisConfig};
    use crate::corpus::{assemble_sessions, Session, Utterance};
    use crate::taxonomy::{Rc4, SpeakerRole};
    use alloc::format;

    fn session(rc: impl Fn(usize) -> Rc4) -> Vec<Session> {
        let rows = (0..40)
            .map(|i| {
                let (role, ut) = match i % 3 {
                    1 => (SpeakerRole::Student, UtteranceType::Rs),
                    _ => (SpeakerRole::Teacher, UtteranceType::Q),
                };
                Utterance::new("s", i, role, format!("t{i}")).with_ut(ut).with_rc4(rc(i))
            })
            .collect();
        assemble_sessions(rows).unwrap().sessions
    }

    fn config() -> AnalysisConfig {
        AnalysisConfig {
            bootstrap_iters: 50,
            ..AnalysisConfig::default()
        }
    }

    #[test]
    fn identical_reports_have_zero_deltas() {
        let s = session(|i| if i % 2 == 0 { Rc4::Srd } else { Rc4::Er });
        let r = analyze(&s, &config(), "human").unwrap();
        let d = compare_label_sources(&r, &r).unwrap();
        assert!(d.bins.iter().all(|b| b.delta.is_none_or(|x| x == 0.0)));
        assert!(d.patterns.iter().all(|p| p.delta == Some(0.0)));
        assert!(d.cells.iter().all(|c| c.delta.is_none_or(|x| x == 0.0)));
        assert!(!d.rebound_absent);
    }

    #[test]
    fn flat_pseudo_trajectory_loses_the_rebound() {
        let human = session(|i| if i >= 32 { Rc4::Sri } else if i >= 24 { Rc4::Er } else { Rc4::Srd });
        let pseudo = session(|i| if i >= 32 { Rc4::Er } else { Rc4::Srd });
        let h = analyze(&human, &config(), "human").unwrap();
        let p = analyze(&pseudo, &config(), "pseudo").unwrap();
        let d = compare_label_sources(&h, &p).unwrap();
        assert_eq!(d.human_rebound, Some(true));
        assert_eq!(d.pseudo_rebound, Some(false));
        assert!(d.rebound_absent);
        assert_eq!(d.final_bins_lower, Some(true));
    }

    #[test]
    fn mismatched_configuration_is_rejected() {
        let s = session(|_| Rc4::Srd);
        let a = analyze(&s, &config(), "human").unwrap();
        let b = analyze(&s, &AnalysisConfig { n_bins: 5, ..config() }, "pseudo").unwrap();
        assert_eq!(
            compare_label_sources(&a, &b),
            Err(AnalyticsError::ConfigMismatch { field: "n_bins" })
        );
        let c = analyze(&s, &AnalysisConfig { confidence_threshold: Some(0.5), ..config() }, "pseudo").unwrap();
        assert!(compare_label_sources(&a, &c).is_ok());
    }
}
