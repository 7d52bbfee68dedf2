use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{label_definitions, render_snippet, ClientError, GenerationRequest, GenerationSettings, GenerativeClient};
use crate::corpus::{ContextWindow, Utterance};
use crate::taxonomy::{Code, Rc4, SpeakerRole, UtteranceType};

pub const EXEMPLARS_PER_CLASS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exemplar {
    pub speaker: SpeakerRole,
    pub text: String,
    pub ut: UtteranceType,
    pub rc4: Rc4,
}

impl Exemplar {
    fn of(u: &Utterance) -> Option<Self> {
        Some(Exemplar {
            speaker: u.speaker,
            text: u.text.clone(),
            ut: u.ut?,
            rc4: u.rc4?,
        })
    }
}

/// In-context examples, up to `per_class` for every UT and every RC class.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExemplarBank {
    pub ut: BTreeMap<UtteranceType, Vec<Exemplar>>,
    pub rc: BTreeMap<Rc4, Vec<Exemplar>>,
}

impl ExemplarBank {
    /// Takes the first fully labelled utterances of each class, in input order.
    pub fn from_utterances<'a>(rows: impl IntoIterator<Item = &'a Utterance>, per_class: usize) -> Self {
        let mut bank = ExemplarBank::default();
        for u in rows {
            let Some(e) = Exemplar::of(u) else { continue };
            let ut = bank.ut.entry(e.ut).or_default();
            if ut.len() < per_class {
                ut.push(e.clone());
            }
            let rc = bank.rc.entry(e.rc4).or_default();
            if rc.len() < per_class {
                rc.push(e);
            }
        }
        bank
    }

    /// Classes with fewer than `per_class` examples.
    pub fn missing(&self, per_class: usize) -> Vec<String> {
        let ut = UtteranceType::ALL
            .iter()
            .filter(|l| self.ut.get(l).map_or(0, Vec::len) < per_class)
            .map(|l| format!("UT {l}"));
        let rc = Rc4::ALL
            .iter()
            .filter(|l| self.rc.get(l).map_or(0, Vec::len) < per_class)
            .map(|l| format!("RC {l}"));
        ut.chain(rc).collect()
    }
}

pub fn build_zero_shot_prompt(
    window: &ContextWindow<'_>,
    bank: &ExemplarBank,
    settings: &GenerationSettings,
) -> GenerationRequest {
    let mut p = String::from(
        "<role>\nYou code utterances in science classroom transcripts.\n</role>\n\n<label_definitions>\n",
    );
    p.push_str(&label_definitions());
    p.push_str("\n</label_definitions>\n\n<examples>\n");
    let line = |p: &mut String, e: &Exemplar| {
        let _ = writeln!(p, "{}: \"{}\" -> {{\"ut\": \"{}\", \"rc\": \"{}\"}}", e.speaker, e.text, e.ut, e.rc4);
    };
    for (label, list) in &bank.ut {
        let _ = writeln!(p, "UT {label}:");
        list.iter().for_each(|e| line(&mut p, e));
    }
    for (label, list) in &bank.rc {
        let _ = writeln!(p, "RC {label}:");
        list.iter().for_each(|e| line(&mut p, e));
    }
    let _ = write!(
        p,
        "</examples>\n\n<snippet>\n{}\n</snippet>\n\n<instructions>\nLabel turn {} (marked with ***). \
         Answer with one JSON object of the form {{\"ut\": \"<UT code>\", \"rc\": \"<RC code>\"}} and nothing else.\n</instructions>",
        render_snippet(window),
        window.before.len() + 1
    );
    GenerationRequest::new(p, 1, settings)
}

/// A parsed answer; each field keeps the raw string when it is not a known code.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroShotAnswer {
    pub ut: Result<UtteranceType, String>,
    pub rc: Result<Rc4, String>,
}

#[derive(Deserialize)]
struct RawAnswer {
    ut: String,
    rc: String,
}

/// Parses a `{"ut": .., "rc": ..}` object. Anything else is an error.
pub fn parse_zero_shot(response: &str) -> Result<ZeroShotAnswer, String> {
    let raw: RawAnswer = serde_json::from_str(response.trim()).map_err(|e| e.to_string())?;
    Ok(ZeroShotAnswer {
        ut: raw.ut.parse().map_err(|_| raw.ut.clone()),
        rc: raw.rc.parse().map_err(|_| raw.rc.clone()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroShotPrediction {
    pub ut: UtteranceType,
    pub rc4: Rc4,
    pub ut_abstained: bool,
    pub rc_abstained: bool,
    pub diagnostics: Vec<String>,
}

/// Classifies one window; unusable labels become `O` with a diagnostic.
///
/// An unparseable answer is retried once before abstaining on both tasks.
/// Service errors are returned as-is.
pub fn zero_shot_classify<C: GenerativeClient>(
    client: &mut C,
    window: &ContextWindow<'_>,
    bank: &ExemplarBank,
    settings: &GenerationSettings,
) -> Result<ZeroShotPrediction, ClientError> {
    let mut request = build_zero_shot_prompt(window, bank, settings);
    let mut diagnostics = Vec::new();
    for _ in 0..2 {
        let response = client.generate(&request)?;
        match parse_zero_shot(&response) {
            Ok(answer) => {
                let ut = answer.ut.unwrap_or_else(|raw| {
                    diagnostics.push(format!("abstained on UT: `{raw}` is not a UT code"));
                    UtteranceType::O
                });
                let rc4 = answer.rc.unwrap_or_else(|raw| {
                    diagnostics.push(format!("abstained on RC: `{raw}` is not an RC code"));
                    Rc4::O
                });
                let ut_abstained = diagnostics.iter().any(|d| d.contains("on UT"));
                let rc_abstained = diagnostics.iter().any(|d| d.contains("on RC"));
                return Ok(ZeroShotPrediction {
                    ut,
                    rc4,
                    ut_abstained,
                    rc_abstained,
                    diagnostics,
                });
            }
            Err(e) => {
                let reason = format!("answer is not a {{\"ut\", \"rc\"}} JSON object ({e})");
                request = request.with_feedback(&reason);
                diagnostics.push(reason);
            }
        }
    }
    diagnostics.push("abstained on UT and RC after retry".into());
    Ok(ZeroShotPrediction {
        ut: UtteranceType::O,
        rc4: Rc4::O,
        ut_abstained: true,
        rc_abstained: true,
        diagnostics,
    })
}
