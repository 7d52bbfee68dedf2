use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::corpus::{Diagnostic, DiagnosticKind, Session};
use crate::numeric::percentile_sorted;
use crate::taxonomy::{Code, SpeakerRole, UtteranceType};

/// UT codes of a teacher, student, teacher triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Trigram {
    pub first: UtteranceType,
    pub student: UtteranceType,
    pub second: UtteranceType,
}

impl Trigram {
    pub fn new(first: UtteranceType, student: UtteranceType, second: UtteranceType) -> Self {
        Trigram { first, student, second }
    }

    fn codes(&self) -> [&'static str; 3] {
        [self.first.code(), self.student.code(), self.second.code()]
    }
}

/// Ordered by the code strings, so `Fq` sorts before `Q`.
impl Ord for Trigram {
    fn cmp(&self, other: &Self) -> Ordering {
        self.codes().cmp(&other.codes())
    }
}

impl PartialOrd for Trigram {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Trigram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}-{}", self.first, self.student, self.second)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    pub session_id: String,
    pub center_turn: usize,
    pub trigram: Trigram,
    /// CCI weight of the student turn.
    pub cci: u8,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainExtraction {
    pub chains: Vec<Chain>,
    /// Triples skipped because a required label is missing.
    pub diagnostics: Vec<Diagnostic>,
}

/// Every consecutive teacher, student, teacher triple in one session.
///
/// The student turn needs UT and RC4 labels; the teacher turns need UT.
/// Overlapping triples are all kept.
pub fn extract_tst_chains(session: &Session) -> ChainExtraction {
    let mut out = ChainExtraction::default();
    for w in session.utterances.windows(3) {
        let roles = [w[0].speaker, w[1].speaker, w[2].speaker];
        if roles != [SpeakerRole::Teacher, SpeakerRole::Student, SpeakerRole::Teacher] {
            continue;
        }
        match (w[0].ut, w[1].ut, w[1].cci(), w[2].ut) {
            (Some(a), Some(b), Some(cci), Some(c)) => out.chains.push(Chain {
                session_id: session.session_id.clone(),
                center_turn: w[1].turn_index,
                trigram: Trigram::new(a, b, c),
                cci,
            }),
            _ => out.diagnostics.push(Diagnostic {
                kind: DiagnosticKind::UnknownLabel,
                line: None,
                session_id: Some(session.session_id.clone()),
                turn_index: Some(w[1].turn_index),
                message: format!("chain centred on turn {} skipped: missing label", w[1].turn_index),
            }),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainPattern {
    pub trigram: Trigram,
    pub n: usize,
    pub mean_cci: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Whether the interval contains the point estimate.
    pub ci_brackets_mean: bool,
    /// Distinct sessions the pattern occurs in.
    pub sessions: usize,
}

/// Groups chains by trigram, keeps groups with at least `min_n` chains and
/// attaches a 95% percentile interval from a session-level bootstrap.
///
/// Each bootstrap iteration draws, with replacement, as many sessions as
/// there are chain-bearing sessions and recomputes every group's mean;
/// iteration `i` uses stream `i` of a ChaCha generator seeded with `seed`, so
/// the result does not depend on evaluation order. Sorted by mean
/// (descending), then `n` (descending), then trigram.
pub fn rank_chain_patterns(
    chains: &[Chain],
    min_n: usize,
    bootstrap_iters: usize,
    seed: u64,
) -> Result<Vec<ChainPattern>, AnalyticsError> {
    if min_n == 0 {
        return Err(AnalyticsError::InvalidMinN);
    }
    if bootstrap_iters == 0 {
        return Err(AnalyticsError::InvalidIterations);
    }
    let mut session_ids: Vec<&str> = chains.iter().map(|c| c.session_id.as_str()).collect();
    session_ids.sort_unstable();
    session_ids.dedup();
    let s_index = |id: &str| session_ids.binary_search(&id).unwrap_or(0);

    let mut groups: BTreeMap<Trigram, Vec<(u64, u64)>> = BTreeMap::new();
    for c in chains {
        let per_session = groups
            .entry(c.trigram)
            .or_insert_with(|| vec![(0, 0); session_ids.len()]);
        let slot = &mut per_session[s_index(&c.session_id)];
        slot.0 += u64::from(c.cci);
        slot.1 += 1;
    }
    groups.retain(|_, v| v.iter().map(|x| x.1).sum::<u64>() >= min_n as u64);

    let keys: Vec<Trigram> = groups.keys().copied().collect();
    let tables: Vec<&Vec<(u64, u64)>> = groups.values().collect();
    let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(bootstrap_iters); keys.len()];
    let n_sessions = session_ids.len();
    let mut drawn = vec![0usize; n_sessions];
    for i in 0..bootstrap_iters {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        drawn.iter_mut().for_each(|d| *d = 0);
        for _ in 0..n_sessions {
            drawn[rng.random_range(0..n_sessions)] += 1;
        }
        for (g, table) in tables.iter().enumerate() {
            let (mut sum, mut n) = (0u64, 0u64);
            for (s, &(gs, gn)) in table.iter().enumerate() {
                sum += gs * drawn[s] as u64;
                n += gn * drawn[s] as u64;
            }
            if n > 0 {
                samples[g].push(sum as f64 / n as f64);
            }
        }
    }

    let mut out: Vec<ChainPattern> = keys
        .iter()
        .zip(tables.iter())
        .zip(samples.iter_mut())
        .map(|((&trigram, table), boot)| {
            let sum: u64 = table.iter().map(|x| x.0).sum();
            let n: u64 = table.iter().map(|x| x.1).sum();
            let mean_cci = sum as f64 / n as f64;
            boot.sort_by(f64::total_cmp);
            let ci_lo = percentile_sorted(boot, 0.025).unwrap_or(mean_cci);
            let ci_hi = percentile_sorted(boot, 0.975).unwrap_or(mean_cci);
            ChainPattern {
                trigram,
                n: n as usize,
                mean_cci,
                ci_lo,
                ci_hi,
                ci_brackets_mean: ci_lo <= mean_cci + 1e-12 && mean_cci <= ci_hi + 1e-12,
                sessions: table.iter().filter(|x| x.1 > 0).count(),
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.mean_cci
            .total_cmp(&a.mean_cci)
            .then(b.n.cmp(&a.n))
            .then(a.trigram.cmp(&b.trigram))
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{assemble_sessions, Utterance};
    use crate::taxonomy::Rc4;

    fn session(id: &str, spec: &[(SpeakerRole, UtteranceType, Option<Rc4>)]) -> Session {
        let rows = spec
            .iter()
            .enumerate()
            .map(|(i, &(role, ut, rc))| {
                let u = Utterance::new(id, i, role, "x").with_ut(ut);
                match rc {
                    Some(r) => u.with_rc4(r),
                    None => u,
                }
            })
            .collect();
        assemble_sessions(rows).unwrap().sessions.remove(0)
    }

    use SpeakerRole::{Student as S, Teacher as T};
    use UtteranceType::*;

    #[test]
    fn overlapping_triples_are_all_counted() {
        let one = session("a", &[(T, Q, None), (S, Rs, Some(Rc4::Srd)), (T, Fq, None)]);
        assert_eq!(extract_tst_chains(&one).chains.len(), 1);
        let two = session(
            "b",
            &[(T, Q, None), (S, Rs, Some(Rc4::Srd)), (T, Fq, None), (S, Rs, Some(Rc4::Sri)), (T, Fy, None)],
        );
        let chains = extract_tst_chains(&two).chains;
        assert_eq!(chains.len(), 2);
        assert_eq!(chains[1].trigram, Trigram::new(Fq, Rs, Fy));
        assert_eq!(chains[1].cci, 3);
    }

    #[test]
    fn unlabelled_centres_are_reported() {
        let s = session("a", &[(T, Q, None), (S, Rs, None), (T, Fq, None)]);
        let e = extract_tst_chains(&s);
        assert!(e.chains.is_empty());
        assert_eq!(e.diagnostics.len(), 1);
    }

    fn chain(session: &str, t: Trigram, cci: u8) -> Chain {
        Chain {
            session_id: session.into(),
            center_turn: 0,
            trigram: t,
            cci,
        }
    }

    #[test]
    fn constant_groups_have_degenerate_intervals() {
        let t = Trigram::new(P, O, P);
        let chains: Vec<Chain> = (0..6).map(|i| chain(if i % 2 == 0 { "a" } else { "b" }, t, 2)).collect();
        let r = rank_chain_patterns(&chains, 5, 200, 1).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!((r[0].ci_lo, r[0].mean_cci, r[0].ci_hi), (2.0, 2.0, 2.0));
    }

    #[test]
    fn single_session_collapses_the_interval() {
        let t = Trigram::new(Fq, Rs, Fq);
        let chains: Vec<Chain> = (0..6).map(|i| chain("a", t, (i % 4) as u8)).collect();
        let r = rank_chain_patterns(&chains, 1, 100, 9).unwrap();
        assert_eq!(r[0].ci_lo, r[0].mean_cci);
        assert_eq!(r[0].ci_hi, r[0].mean_cci);
    }

    #[test]
    fn ordering_and_filtering() {
        let hi = Trigram::new(Q, Rs, Q);
        let lo = Trigram::new(Fq, Rs, Fq);
        let rare = Trigram::new(E, Rs, E);
        let mut chains = Vec::new();
        chains.extend((0..5).map(|_| chain("a", hi, 3)));
        chains.extend((0..6).map(|_| chain("b", lo, 3)));
        chains.extend((0..2).map(|_| chain("a", rare, 3)));
        let r = rank_chain_patterns(&chains, 5, 50, 0).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(r[0].trigram, lo);
        assert_eq!(r[1].trigram, hi);
        assert_eq!(r, rank_chain_patterns(&chains, 5, 50, 0).unwrap());
        assert!(rank_chain_patterns(&chains, 0, 50, 0).is_err());
        assert!(rank_chain_patterns(&chains, 5, 0, 0).is_err());
        assert!(rank_chain_patterns(&chains, 100, 5, 0).unwrap().is_empty());
        assert!(Trigram::new(Fq, Rs, Q) < Trigram::new(P, O, P));
    }
}
