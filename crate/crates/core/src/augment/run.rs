use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    build_augmentation_prompt, parse_variations, AugmentError, BoostPlan, GenerationSettings,
    GenerativeClient, Variation,
};
use crate::corpus::{ContextWindow, Provenance, Session, Utterance, UtteranceRef};
use crate::taxonomy::SpeakerRole;

pub const MAX_ATTEMPTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Expansion factor `n` of the second pass; may be fractional.
    pub main_scale: f64,
    /// Seed for choosing which originals receive the fractional remainder.
    pub seed: u64,
    pub max_attempts: usize,
    pub settings: GenerationSettings,
}

impl AugmentConfig {
    pub fn new(main_scale: f64, settings: GenerationSettings) -> Self {
        AugmentConfig {
            main_scale,
            seed: 0,
            max_attempts: MAX_ATTEMPTS,
            settings,
        }
    }
}

/// A validated variation plus where it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticExample {
    /// 1 for minority boost, 2 for the main expansion.
    pub pass: u8,
    /// Position within the response that produced it.
    pub index: usize,
    /// Speakers of the source window, before/target/after order.
    pub speakers: Vec<SpeakerRole>,
    pub variation: Variation,
}

impl SyntheticExample {
    pub fn session_id(&self) -> String {
        let src = &self.variation.source;
        format!("{}~t{}~p{}~v{}", src.session_id, src.turn_index, self.pass, self.index)
    }

    /// The variation as a standalone session in which only the target is labelled.
    pub fn to_session(&self) -> Session {
        let id = self.session_id();
        let v = &self.variation;
        let center = v.before.len();
        let texts = v.before.iter().chain(core::iter::once(&v.target)).chain(v.after.iter());
        let utterances = texts
            .zip(&self.speakers)
            .enumerate()
            .map(|(i, (text, &speaker))| {
                let mut u = Utterance::new(id.clone(), i, speaker, text.clone())
                    .with_provenance(Provenance::Synthetic);
                if i == center {
                    u = u.with_ut(v.ut).with_rc4(v.rc4);
                }
                u
            })
            .collect();
        let mut metadata = BTreeMap::new();
        metadata.insert("source_session".into(), v.source.session_id.clone());
        metadata.insert("source_turn".into(), v.source.turn_index.to_string());
        metadata.insert("pass".into(), self.pass.to_string());
        Session {
            session_id: id,
            utterances,
            metadata,
        }
    }
}

/// A request that still failed after every attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedRequest {
    pub source: UtteranceRef,
    pub pass: u8,
    pub variations: usize,
    /// One entry per attempt.
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedSet {
    /// Labelled human targets the passes drew from, sorted.
    pub originals: Vec<UtteranceRef>,
    /// Sorted by pass, source, then index.
    pub examples: Vec<SyntheticExample>,
    pub pass1: usize,
    pub pass2: usize,
    /// Requests sent, counting retries.
    pub attempts: usize,
}

impl AugmentedSet {
    /// Labelled training rows: originals plus every synthetic target.
    pub fn len(&self) -> usize {
        self.originals.len() + self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn synthetic_sessions(&self) -> Vec<Session> {
        self.examples.iter().map(SyntheticExample::to_session).collect()
    }
}

/// Variation counts of the second pass, one per original.
///
/// Every original gets `floor(n)`; a seeded sample of the originals gets one
/// more so that the total is `floor(n * N)`.
fn pass2_counts(n_originals: usize, scale: f64, seed: u64) -> Vec<usize> {
    let base = libm::floor(scale) as usize;
    let total = libm::floor(scale * n_originals as f64 + 1e-9) as usize;
    let mut counts = vec![base; n_originals];
    let remainder = total.saturating_sub(base * n_originals).min(n_originals);
    if remainder > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in rand::seq::index::sample(&mut rng, n_originals, remainder) {
            counts[i] += 1;
        }
    }
    counts
}

fn request_variations<C: GenerativeClient>(
    client: &mut C,
    window: &ContextWindow<'_>,
    variations: usize,
    pass: u8,
    config: &AugmentConfig,
    attempts: &mut usize,
) -> Result<Result<Vec<Variation>, FailedRequest>, AugmentError> {
    let mut request = build_augmentation_prompt(window, variations, &config.settings)?;
    let mut reasons = Vec::new();
    for _ in 0..config.max_attempts.max(1) {
        *attempts += 1;
        match client.generate(&request) {
            Ok(response) => match parse_variations(&response, variations, window) {
                Ok(v) => return Ok(Ok(v)),
                Err(rejection) => {
                    let reason = rejection.to_string();
                    request = request.with_feedback(&reason);
                    reasons.push(reason);
                }
            },
            Err(e) => reasons.push(e.to_string()),
        }
    }
    Ok(Err(FailedRequest {
        source: window.target.reference(),
        pass,
        variations,
        reasons,
    }))
}

/// Runs the optional minority-boost pass and the main expansion pass.
///
/// Originals are the labelled, non-synthetic targets among `windows`. The
/// second pass draws only from originals. Requests that keep failing are
/// dropped; if any were dropped the partial set is returned inside
/// [`AugmentError::Partial`].
pub fn run_augmentation<C: GenerativeClient>(
    client: &mut C,
    windows: &[ContextWindow<'_>],
    plan: Option<&BoostPlan>,
    config: &AugmentConfig,
) -> Result<AugmentedSet, AugmentError> {
    let scale = config.main_scale;
    if !(scale.is_finite() && scale >= 0.0) {
        return Err(AugmentError::InvalidScale(scale));
    }
    let mut originals: Vec<&ContextWindow<'_>> = windows
        .iter()
        .filter(|w| w.target.is_fully_labeled() && w.target.provenance != Provenance::Synthetic)
        .collect();
    originals.sort_by_key(|a| a.target.reference());
    originals.dedup_by(|a, b| a.target.reference() == b.target.reference());

    let mut jobs: Vec<(u8, usize, usize)> = Vec::new();
    if let Some(plan) = plan {
        for (i, w) in originals.iter().enumerate() {
            let e = plan.extras_for(&w.target.reference()) as usize;
            if e > 0 {
                jobs.push((1, i, e));
            }
        }
    }
    for (i, &c) in pass2_counts(originals.len(), scale, config.seed).iter().enumerate() {
        if c > 0 {
            jobs.push((2, i, c));
        }
    }

    let mut examples = Vec::new();
    let mut failed = Vec::new();
    let mut attempts = 0;
    let (mut pass1, mut pass2) = (0, 0);
    for (pass, i, n) in jobs {
        let w = originals[i];
        match request_variations(client, w, n, pass, config, &mut attempts)? {
            Ok(vars) => {
                if pass == 1 {
                    pass1 += vars.len();
                } else {
                    pass2 += vars.len();
                }
                let speakers: Vec<SpeakerRole> = w.turns().map(|u| u.speaker).collect();
                examples.extend(vars.into_iter().enumerate().map(|(index, variation)| SyntheticExample {
                    pass,
                    index,
                    speakers: speakers.clone(),
                    variation,
                }));
            }
            Err(f) => failed.push(f),
        }
    }

    let set = AugmentedSet {
        originals: originals.iter().map(|w| w.target.reference()).collect(),
        examples,
        pass1,
        pass2,
        attempts,
    };
    if failed.is_empty() {
        Ok(set)
    } else {
        Err(AugmentError::Partial {
            set: Box::new(set),
            failed,
        })
    }
}
