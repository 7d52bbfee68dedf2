//! Synthetic corpora shaped after published count tables, plus a scripted
//! generative client. Everything is deterministic.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::augment::{ClientError, GenerationRequest, GenerativeClient};
use crate::corpus::{assemble_sessions, Session, Utterance};
use crate::taxonomy::{Code, Rc4, SpeakerRole, UtteranceType};

use Rc4::{Er, Srd, Sri};
use UtteranceType::*;

/// UT counts per split (train, val, test) for the split fixture.
pub const SPLIT_UT_COUNTS: [(UtteranceType, [u64; 3]); 10] = [
    (Rs, [237, 138, 62]),
    (Fq, [99, 85, 25]),
    (Q, [131, 34, 32]),
    (UtteranceType::O, [104, 39, 50]),
    (Fs, [90, 48, 55]),
    (P, [81, 55, 18]),
    (Ry, [51, 37, 16]),
    (E, [80, 8, 14]),
    (Rq, [32, 38, 28]),
    (Fy, [80, 10, 5]),
];

/// RC4 counts per split for the split fixture.
pub const SPLIT_RC_COUNTS: [(Rc4, [u64; 3]); 4] = [
    (Srd, [596, 265, 176]),
    (Rc4::O, [256, 182, 112]),
    (Sri, [97, 31, 11]),
    (Er, [36, 14, 6]),
];

/// Session ids of the split fixture grouped as the counts above were laid out.
pub const SPLIT_LAYOUT: [&[&str]; 3] = [
    &["s01", "s03", "s04", "s06", "s07", "s09"],
    &["s02", "s08"],
    &["s05"],
];

const TRAIN_WEIGHTS: [u64; 6] = [22, 19, 17, 16, 14, 12];
const VAL_WEIGHTS: [u64; 2] = [55, 45];

/// Splits `total` in proportion to `weights` by largest remainder.
fn apportion(total: u64, weights: &[u64]) -> Vec<u64> {
    let sum: u64 = weights.iter().sum();
    let mut parts: Vec<u64> = weights.iter().map(|w| total * w / sum).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by_key(|&i| (core::cmp::Reverse(total * weights[i] % sum), i));
    let short = total - parts.iter().sum::<u64>();
    for &i in order.iter().take(short as usize) {
        parts[i] += 1;
    }
    parts
}

fn speaker_for(ut: UtteranceType, turn: usize) -> SpeakerRole {
    ut.speaker().unwrap_or(if turn.is_multiple_of(2) { SpeakerRole::Teacher } else { SpeakerRole::Student })
}

/// Nine sessions whose per-split label totals match [`SPLIT_UT_COUNTS`] and
/// [`SPLIT_RC_COUNTS`] under [`SPLIT_LAYOUT`]. SR-I sits in exactly one
/// session per split.
pub fn split_fixture() -> Vec<Session> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut rows = Vec::new();
    for (split, ids) in SPLIT_LAYOUT.iter().enumerate() {
        let weights: &[u64] = match split {
            0 => &TRAIN_WEIGHTS,
            1 => &VAL_WEIGHTS,
            _ => &[1],
        };
        let mut uts: Vec<Vec<UtteranceType>> = vec![Vec::new(); ids.len()];
        let mut rcs: Vec<Vec<Rc4>> = vec![Vec::new(); ids.len()];
        for &(ut, counts) in &SPLIT_UT_COUNTS {
            for (s, n) in apportion(counts[split], weights).into_iter().enumerate() {
                uts[s].extend(std::iter::repeat_n(ut, n as usize));
            }
        }
        // Session sizes come from the UT layout; RC labels fill them, with
        // SR-I concentrated in the first session of the split.
        let sizes: Vec<usize> = uts.iter().map(Vec::len).collect();
        let mut pool: Vec<Rc4> = Vec::new();
        for &(rc, counts) in &SPLIT_RC_COUNTS {
            if rc == Sri {
                rcs[0].extend(std::iter::repeat_n(Sri, counts[split] as usize));
            } else {
                pool.extend(std::iter::repeat_n(rc, counts[split] as usize));
            }
        }
        pool.shuffle(&mut rng);
        let mut pool = pool.into_iter();
        for (s, size) in sizes.iter().enumerate() {
            while rcs[s].len() < *size {
                rcs[s].push(pool.next().expect("UT and RC totals agree"));
            }
        }
        for (s, id) in ids.iter().enumerate() {
            let mut pairs: Vec<(UtteranceType, Rc4)> = uts[s].iter().copied().zip(rcs[s].iter().copied()).collect();
            pairs.shuffle(&mut rng);
            for (turn, (ut, rc)) in pairs.into_iter().enumerate() {
                rows.push(
                    Utterance::new(*id, turn, speaker_for(ut, turn), format!("{id} turn {turn}"))
                        .with_ut(ut)
                        .with_rc4(rc),
                );
            }
        }
    }
    assemble_sessions(rows).expect("fixture rows are well formed").sessions
}

/// Teacher UT by following student RC4 counts for the lag fixture.
pub const LAG_COUNTS: [(UtteranceType, [(Rc4, u64); 4]); 6] = [
    (E, [(Srd, 8), (Sri, 0), (Er, 2), (Rc4::O, 11)]),
    (Fq, [(Srd, 126), (Sri, 29), (Er, 8), (Rc4::O, 36)]),
    (Fs, [(Srd, 54), (Sri, 0), (Er, 2), (Rc4::O, 49)]),
    (Fy, [(Srd, 14), (Sri, 2), (Er, 1), (Rc4::O, 15)]),
    (P, [(Srd, 25), (Sri, 2), (Er, 2), (Rc4::O, 66)]),
    (Q, [(Srd, 113), (Sri, 12), (Er, 7), (Rc4::O, 33)]),
];

/// Alternating teacher and student turns realising [`LAG_COUNTS`], dealt
/// over five sessions.
pub fn lag_fixture() -> Vec<Session> {
    let mut pairs = Vec::new();
    for &(ut, row) in &LAG_COUNTS {
        for (rc, n) in row {
            pairs.extend(std::iter::repeat_n((ut, rc), n as usize));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a9);
    pairs.shuffle(&mut rng);
    let mut rows = Vec::new();
    let mut next_turn = [0usize; 5];
    for (i, (ut, rc)) in pairs.into_iter().enumerate() {
        let s = i % 5;
        let id = format!("lag{}", s + 1);
        let student_ut = if rc == Rc4::O { UtteranceType::O } else { Rs };
        let t = next_turn[s];
        rows.push(Utterance::new(id.clone(), t, SpeakerRole::Teacher, format!("prompt {t}")).with_ut(ut));
        rows.push(
            Utterance::new(id, t + 1, SpeakerRole::Student, format!("reply {t}"))
                .with_ut(student_ut)
                .with_rc4(rc),
        );
        next_turn[s] += 2;
    }
    assemble_sessions(rows).expect("fixture rows are well formed").sessions
}

/// One chain group of the discourse fixture: teacher, student, teacher UTs
/// and the student RC4 label of each chain.
pub struct ChainGroup {
    pub first: UtteranceType,
    pub student: UtteranceType,
    pub second: UtteranceType,
    pub centers: &'static [Rc4],
}

const fn group(first: UtteranceType, student: UtteranceType, second: UtteranceType, centers: &'static [Rc4]) -> ChainGroup {
    ChainGroup { first, student, second, centers }
}

const FQ_RS_FQ: [Rc4; 36] = {
    let mut c = [Srd; 36];
    c[0] = Sri;
    c[1] = Sri;
    c[2] = Sri;
    c[3] = Sri;
    c[34] = Er;
    c[35] = Er;
    c
};

/// Chain groups of the discourse fixture.
pub const CHAIN_GROUPS: [ChainGroup; 10] = [
    group(Fq, Rs, Fq, &FQ_RS_FQ),
    group(Fq, Rq, Fq, &[Srd; 7]),
    group(Q, Rs, Q, &[Srd; 6]),
    group(P, UtteranceType::O, P, &[Rc4::O; 10]),
    group(Fq, Rs, Q, &[Sri, Sri, Sri, Sri]),
    group(Fq, Rq, Q, &[Sri, Sri, Sri, Srd]),
    group(Fq, Ry, Q, &[Srd, Srd, Srd]),
    group(Fq, UtteranceType::O, Q, &[Er, Er, Rc4::O]),
    group(E, Rs, Fs, &[Srd, Srd]),
    group(Fs, Ry, Fy, &[Er, Rc4::O, Er, Rc4::O, Rc4::O]),
];

/// Teacher to student adjacencies that are not part of a chain, as
/// (teacher UT, student UT, count).
pub const ADJACENCY_COUNTS: [(UtteranceType, UtteranceType, usize); 6] = [
    (P, Rq, 23),
    (P, Rs, 40),
    (P, Ry, 27),
    (Q, Rs, 70),
    (Q, Rq, 5),
    (Q, Ry, 10),
];

/// Q to O adjacencies outside chains; kept apart from [`ADJACENCY_COUNTS`]
/// so the P and Q rows each total 100.
pub const Q_TO_O: usize = 9;

enum Unit {
    Chain(UtteranceType, UtteranceType, UtteranceType, Rc4),
    Pair(UtteranceType, UtteranceType),
}

/// Chains and adjacencies laid out so that ranked patterns, the framing grid
/// and the Rq trigger rows land on chosen values. Each adjacency is followed
/// by a second student turn so it never closes a chain; units are shuffled
/// and dealt over six sessions.
pub fn discourse_fixture() -> Vec<Session> {
    let mut units = Vec::new();
    for g in &CHAIN_GROUPS {
        for &rc in g.centers {
            units.push(Unit::Chain(g.first, g.student, g.second, rc));
        }
    }
    for &(t, s, n) in &ADJACENCY_COUNTS {
        units.extend((0..n).map(|_| Unit::Pair(t, s)));
    }
    units.extend((0..Q_TO_O).map(|_| Unit::Pair(Q, UtteranceType::O)));

    let mut rng = ChaCha8Rng::seed_from_u64(0xd15c);
    units.shuffle(&mut rng);
    let mut rows = Vec::new();
    let mut next_turn = [0usize; 6];
    for (i, unit) in units.into_iter().enumerate() {
        let s = i % 6;
        let id = format!("lesson{}", s + 1);
        let mut push = |speaker, ut: UtteranceType, rc: Option<Rc4>| {
            let t = next_turn[s];
            let u = Utterance::new(id.clone(), t, speaker, format!("{} {t}", ut.code())).with_ut(ut);
            rows.push(match rc {
                Some(rc) => u.with_rc4(rc),
                None => u,
            });
            next_turn[s] += 1;
        };
        match unit {
            Unit::Chain(a, b, c, rc) => {
                push(SpeakerRole::Teacher, a, None);
                push(SpeakerRole::Student, b, Some(rc));
                push(SpeakerRole::Teacher, c, None);
            }
            Unit::Pair(t, st) => {
                let rc = if st == UtteranceType::O { Rc4::O } else { Srd };
                push(SpeakerRole::Teacher, t, None);
                push(SpeakerRole::Student, st, Some(rc));
                push(SpeakerRole::Student, Rs, Some(Srd));
            }
        }
    }
    assemble_sessions(rows).expect("fixture rows are well formed").sessions
}

const CLASS_WORDS: [(Rc4, [&str; 12]); 4] = [
    (Er, ["mom", "kitchen", "yesterday", "feels", "home", "dinner", "grandma", "bike", "summer", "phone", "car", "game"]),
    (Srd, ["measured", "observed", "table", "recorded", "mass", "volume", "color", "data", "graph", "sample", "length", "counted"]),
    (Sri, ["because", "therefore", "predict", "hypothesis", "causes", "explains", "evidence", "model", "infer", "implies", "depends", "reason"]),
    (Rc4::O, ["okay", "turn", "page", "quiet", "line", "bathroom", "hands", "folder", "pencil", "later", "seat", "thanks"]),
];

const FILLER: [&str; 10] = ["the", "we", "it", "so", "and", "that", "is", "a", "of", "this"];

/// Short documents whose class is determined by disjoint content words;
/// classes are dealt round robin.
pub fn separable_rc_corpus(n_docs: usize, seed: u64) -> Vec<(String, Rc4)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_docs)
        .map(|i| {
            let (label, words) = CLASS_WORDS[i % CLASS_WORDS.len()];
            let mut doc: Vec<&str> = (0..4).map(|_| words[rng.random_range(0..words.len())]).collect();
            doc.extend((0..5).map(|_| FILLER[rng.random_range(0..FILLER.len())]));
            doc.shuffle(&mut rng);
            (doc.join(" "), label)
        })
        .collect()
}

/// Generative client that answers augmentation prompts with well-formed
/// variations, reading the count and window shape from the prompt.
///
/// The first `malformed_first` calls get a fenced reply that the response
/// validator rejects. `prompts` records every request in order.
#[derive(Debug, Default, Clone)]
pub struct ScriptedGenerator {
    pub malformed_first: usize,
    pub prompts: Vec<String>,
}

impl ScriptedGenerator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn calls(&self) -> usize {
        self.prompts.len()
    }
}

fn between<'a>(s: &'a str, start: &str, end: &str) -> Option<&'a str> {
    let a = s.find(start)? + start.len();
    let b = a + s[a..].find(end)?;
    Some(&s[a..b])
}

/// A valid reply to an augmentation request, or `None` if the prompt does
/// not carry the expected markers.
pub fn well_formed_reply(request: &GenerationRequest) -> Option<String> {
    let window: usize = between(&request.prompt, "(all ", " turns)")?.parse().ok()?;
    let center: usize = between(&request.prompt, "is turn ", " (marked")?.parse().ok()?;
    let before = center.checked_sub(1)?;
    let after = window.checked_sub(center)?;
    let quoted = |n: usize| vec!["\"context\""; n].join(", ");
    let items: Vec<String> = (0..request.variations)
        .map(|v| {
            format!(
                "{{\"before\": [{}], \"target\": \"variation {v}\", \"after\": [{}]}}",
                quoted(before),
                quoted(after)
            )
        })
        .collect();
    Some(format!("[{}]", items.join(", ")))
}

impl GenerativeClient for ScriptedGenerator {
    fn generate(&mut self, request: &GenerationRequest) -> Result<String, ClientError> {
        self.prompts.push(request.prompt.clone());
        if self.prompts.len() <= self.malformed_first {
            return Ok("```json\n[]\n```".to_string());
        }
        well_formed_reply(request).ok_or_else(|| ClientError::Service("prompt without window markers".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LabelDistribution;

    #[test]
    fn apportion_preserves_totals() {
        assert_eq!(apportion(97, &TRAIN_WEIGHTS).iter().sum::<u64>(), 97);
        assert_eq!(apportion(5, &[1, 1]), [3, 2]);
        assert_eq!(apportion(0, &VAL_WEIGHTS), [0, 0]);
    }

    #[test]
    fn split_fixture_totals_match_the_tables() {
        let sessions = split_fixture();
        assert_eq!(sessions.len(), 9);
        for (split, ids) in SPLIT_LAYOUT.iter().enumerate() {
            let rows = || sessions.iter().filter(|s| ids.contains(&s.session_id.as_str())).flat_map(|s| s.utterances.iter());
            let ut = LabelDistribution::from_labels(rows().map(|u| u.ut));
            let rc = LabelDistribution::from_labels(rows().map(|u| u.rc4));
            for &(code, counts) in &SPLIT_UT_COUNTS {
                assert_eq!(ut.count(code), counts[split], "{code} in split {split}");
            }
            for &(code, counts) in &SPLIT_RC_COUNTS {
                assert_eq!(rc.count(code), counts[split], "{code} in split {split}");
            }
        }
        let with_sri = sessions.iter().filter(|s| s.utterances.iter().any(|u| u.rc4 == Some(Sri))).count();
        assert_eq!(with_sri, 3);
        assert_eq!(sessions.iter().map(Session::len).sum::<usize>(), 1782);
    }

    #[test]
    fn fixture_unit_totals() {
        let n: usize = CHAIN_GROUPS.iter().map(|g| g.centers.len()).sum();
        assert_eq!(n, 36 + 7 + 6 + 10 + 14 + 2 + 5);
        let cci: u32 = FQ_RS_FQ.iter().map(|r| u32::from(r.cci_weight())).sum();
        assert_eq!(cci, 74);
        assert_eq!(lag_fixture().iter().map(Session::len).sum::<usize>(), 2 * 617);
    }

    #[test]
    fn separable_corpus_is_balanced() {
        let docs = separable_rc_corpus(500, 3);
        assert_eq!(docs.len(), 500);
        assert_eq!(docs.iter().filter(|d| d.1 == Sri).count(), 125);
        assert_eq!(docs, separable_rc_corpus(500, 3));
    }
}
