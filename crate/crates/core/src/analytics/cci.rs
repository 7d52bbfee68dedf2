use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::corpus::{Session, Utterance};
use crate::numeric::{mean, sample_stdev};
use crate::taxonomy::SpeakerRole;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CciScope {
    #[default]
    All,
    StudentOnly,
}

impl CciScope {
    pub fn includes(self, u: &Utterance) -> bool {
        match self {
            CciScope::All => true,
            CciScope::StudentOnly => u.speaker == SpeakerRole::Student,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CciScope::All => "all",
            CciScope::StudentOnly => "student",
        }
    }
}

/// Mean CCI weight over the RC4-labelled utterances in scope; `None` if there are none.
pub fn session_cci(session: &Session, scope: CciScope) -> Option<f64> {
    let w: Vec<f64> = session
        .utterances
        .iter()
        .filter(|u| scope.includes(u))
        .filter_map(|u| u.cci().map(f64::from))
        .collect();
    mean(&w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CciBin {
    pub index: usize,
    /// In-scope utterances that fell into the bin.
    pub count: usize,
    /// Of those, how many carry an RC4 label.
    pub labeled: usize,
    pub mean: Option<f64>,
    /// Sample standard deviation; needs two labelled utterances.
    pub stdev: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CciSeries {
    pub n_bins: usize,
    pub scope: CciScope,
    pub bins: Vec<CciBin>,
}

impl CciSeries {
    pub fn means(&self) -> Vec<Option<f64>> {
        self.bins.iter().map(|b| b.mean).collect()
    }

    fn from_groups(groups: Vec<(usize, Vec<f64>)>, scope: CciScope) -> Self {
        let n_bins = groups.len();
        let bins = groups
            .into_iter()
            .enumerate()
            .map(|(index, (count, w))| CciBin {
                index,
                count,
                labeled: w.len(),
                mean: mean(&w),
                stdev: sample_stdev(&w),
            })
            .collect();
        CciSeries { n_bins, scope, bins }
    }
}

/// Sizes of `n_bins` contiguous spans over `len` items; the first
/// `len % n_bins` spans take one extra item.
pub fn bin_sizes(len: usize, n_bins: usize) -> Vec<usize> {
    if n_bins == 0 {
        return Vec::new();
    }
    let base = len / n_bins;
    let extra = len % n_bins;
    (0..n_bins).map(|i| base + usize::from(i < extra)).collect()
}

fn bin_of_turns(len: usize, n_bins: usize) -> Vec<usize> {
    bin_sizes(len, n_bins)
        .into_iter()
        .enumerate()
        .flat_map(|(b, size)| std::iter::repeat_n(b, size))
        .collect()
}

fn check_bins(n_bins: usize) -> Result<(), AnalyticsError> {
    if n_bins == 0 {
        Err(AnalyticsError::InvalidBins)
    } else {
        Ok(())
    }
}

fn collect(
    groups: &mut [(usize, Vec<f64>)],
    session: &Session,
    bins: &[usize],
    scope: CciScope,
) {
    for (u, &b) in session.utterances.iter().zip(bins) {
        if scope.includes(u) {
            groups[b].0 += 1;
            if let Some(w) = u.cci() {
                groups[b].1.push(f64::from(w));
            }
        }
    }
}

/// Splits the turn sequence into `n_bins` spans by utterance count and
/// averages the in-scope CCI of each.
pub fn temporal_cci(session: &Session, n_bins: usize, scope: CciScope) -> Result<CciSeries, AnalyticsError> {
    aggregate_temporal_cci(core::slice::from_ref(session), n_bins, scope)
}

/// Bins every session separately, then pools the utterances of equal bin
/// indices across sessions.
pub fn aggregate_temporal_cci(sessions: &[Session], n_bins: usize, scope: CciScope) -> Result<CciSeries, AnalyticsError> {
    check_bins(n_bins)?;
    let mut groups = vec![(0usize, Vec::new()); n_bins];
    for s in sessions {
        collect(&mut groups, s, &bin_of_turns(s.len(), n_bins), scope);
    }
    Ok(CciSeries::from_groups(groups, scope))
}

/// Equal-width time bins between the first and last timestamp of each
/// session; every utterance must carry a timestamp.
pub fn temporal_cci_by_time(sessions: &[Session], n_bins: usize, scope: CciScope) -> Result<CciSeries, AnalyticsError> {
    check_bins(n_bins)?;
    let mut groups = vec![(0usize, Vec::new()); n_bins];
    for s in sessions {
        let mut times = Vec::with_capacity(s.len());
        for u in &s.utterances {
            match u.timestamp {
                Some(t) if t.is_finite() => times.push(t),
                _ => {
                    return Err(AnalyticsError::MissingTimestamp {
                        session_id: s.session_id.clone(),
                        turn_index: u.turn_index,
                    })
                }
            }
        }
        let lo = times.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        let bins: Vec<usize> = times
            .iter()
            .map(|&t| {
                if span <= 0.0 {
                    0
                } else {
                    (libm::floor((t - lo) / span * n_bins as f64) as usize).min(n_bins - 1)
                }
            })
            .collect();
        collect(&mut groups, s, &bins, scope);
    }
    Ok(CciSeries::from_groups(groups, scope))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::assemble_sessions;
    use crate::taxonomy::Rc4;
    use alloc::format;

    fn session(labels: &[Option<Rc4>]) -> Session {
        let rows = labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let role = if i % 2 == 0 { SpeakerRole::Teacher } else { SpeakerRole::Student };
                let u = Utterance::new("s", i, role, format!("u{i}"));
                match l {
                    Some(rc) => u.with_rc4(*rc),
                    None => u,
                }
            })
            .collect();
        assemble_sessions(rows).unwrap().sessions.remove(0)
    }

    #[test]
    fn session_means() {
        let s = session(&[Some(Rc4::Srd), Some(Rc4::Sri), Some(Rc4::O), Some(Rc4::Er)]);
        assert_eq!(session_cci(&s, CciScope::All), Some(1.5));
        assert_eq!(session_cci(&s, CciScope::StudentOnly), Some(2.0));
        assert_eq!(session_cci(&session(&[Some(Rc4::Sri); 3]), CciScope::All), Some(3.0));
        assert_eq!(session_cci(&session(&[None, None]), CciScope::All), None);
    }

    #[test]
    fn remainder_goes_to_early_bins() {
        assert_eq!(bin_sizes(23, 10), [3, 3, 3, 2, 2, 2, 2, 2, 2, 2]);
        assert_eq!(bin_sizes(10, 10), [1; 10]);
        assert_eq!(bin_sizes(3, 5), [1, 1, 1, 0, 0]);
    }

    #[test]
    fn constant_labels_give_a_flat_series() {
        let s = session(&[Some(Rc4::Srd); 23]);
        let series = temporal_cci(&s, 10, CciScope::All).unwrap();
        assert!(series.bins.iter().all(|b| b.mean == Some(2.0)));
        assert_eq!(series.bins.iter().map(|b| b.count).sum::<usize>(), 23);
        assert!(temporal_cci(&s, 0, CciScope::All).is_err());
    }

    #[test]
    fn timestamps_bin_by_width() {
        let mut s = session(&[Some(Rc4::O), Some(Rc4::O), Some(Rc4::Sri)]);
        for (u, t) in s.utterances.iter_mut().zip([0.0, 1.0, 10.0]) {
            u.timestamp = Some(t);
        }
        let series = temporal_cci_by_time(core::slice::from_ref(&s), 2, CciScope::All).unwrap();
        assert_eq!(series.bins[0].count, 2);
        assert_eq!(series.bins[1].mean, Some(3.0));
        s.utterances[1].timestamp = None;
        assert!(matches!(
            temporal_cci_by_time(&[s], 2, CciScope::All),
            Err(AnalyticsError::MissingTimestamp { turn_index: 1, .. })
        ));
    }
}
