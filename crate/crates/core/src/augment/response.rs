use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{ContextWindow, Provenance, UtteranceRef, WindowShape};
use crate::taxonomy::{Rc4, UtteranceType};

/// One regenerated snippet, carrying the source target's labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variation {
    pub before: Vec<String>,
    pub target: String,
    pub after: Vec<String>,
    pub ut: UtteranceType,
    pub rc4: Rc4,
    pub source: UtteranceRef,
    pub provenance: Provenance,
}

impl Variation {
    pub fn shape(&self) -> WindowShape {
        WindowShape {
            before: self.before.len(),
            after: self.after.len(),
        }
    }
}

/// Why a generated response was not accepted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
pub enum Rejection {
    #[error("response is wrapped in markdown fences")]
    MarkdownFence,
    #[error("response is not valid JSON: {0}")]
    MalformedJson(String),
    #[error("response is not a JSON array")]
    NotAnArray,
    #[error("element {index} lacks a string `target` or string-array `before`/`after`: {message}")]
    MalformedElement { index: usize, message: String },
    #[error("expected {expected} variations, got {found}")]
    CountMismatch { expected: usize, found: usize },
    #[error("element {index} has {found_before}/{found_after} context turns, expected {expected_before}/{expected_after}")]
    ShapeMismatch {
        index: usize,
        expected_before: usize,
        expected_after: usize,
        found_before: usize,
        found_after: usize,
    },
    #[error("element {index} has an empty target")]
    EmptyTarget { index: usize },
    #[error("source target lacks a UT or RC label")]
    UnlabeledSource,
}

#[derive(Deserialize)]
struct RawVariation {
    before: Vec<String>,
    target: String,
    after: Vec<String>,
}

/// Strictly parses a generated JSON array of snippet variations.
///
/// The element count must equal `expected` and every element must have the
/// same number of before/after turns as `source`.
pub fn parse_variations(
    response: &str,
    expected: usize,
    source: &ContextWindow<'_>,
) -> Result<Vec<Variation>, Rejection> {
    if response.contains("```") {
        return Err(Rejection::MarkdownFence);
    }
    let (Some(ut), Some(rc4)) = (source.target.ut, source.target.rc4) else {
        return Err(Rejection::UnlabeledSource);
    };
    let value: serde_json::Value =
        serde_json::from_str(response.trim()).map_err(|e| Rejection::MalformedJson(e.to_string()))?;
    let serde_json::Value::Array(items) = value else {
        return Err(Rejection::NotAnArray);
    };
    if items.len() != expected {
        return Err(Rejection::CountMismatch {
            expected,
            found: items.len(),
        });
    }
    let shape = source.shape();
    let mut out = Vec::with_capacity(items.len());
    for (index, item) in items.into_iter().enumerate() {
        let raw: RawVariation = serde_json::from_value(item).map_err(|e| Rejection::MalformedElement {
            index,
            message: format!("{e}"),
        })?;
        if raw.before.len() != shape.before || raw.after.len() != shape.after {
            return Err(Rejection::ShapeMismatch {
                index,
                expected_before: shape.before,
                expected_after: shape.after,
                found_before: raw.before.len(),
                found_after: raw.after.len(),
            });
        }
        if raw.target.trim().is_empty() {
            return Err(Rejection::EmptyTarget { index });
        }
        out.push(Variation {
            before: raw.before,
            target: raw.target,
            after: raw.after,
            ut,
            rc4,
            source: source.target.reference(),
            provenance: Provenance::Synthetic,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{assemble_sessions, Session, Utterance};
    use crate::taxonomy::SpeakerRole;

    fn session() -> Session {
        let rows = (0..5)
            .map(|i| {
                let u = Utterance::new("s", i, SpeakerRole::Teacher, format!("turn {i}"));
                if i == 2 {
                    u.with_ut(UtteranceType::Q).with_rc4(Rc4::Srd)
                } else {
                    u
                }
            })
            .collect();
        assemble_sessions(rows).unwrap().sessions.remove(0)
    }

    const TWO: &str = r#"[
      {"before": ["Good morning.", "Morning."], "target": "Can someone explain how photosynthesis works?", "after": ["Plants use light.", "Yes, go on."]},
      {"before": ["Hello all.", "Hi."], "target": "Who can describe the steps involved in photosynthesis?", "after": ["Light makes sugar.", "Good."]}
    ]"#;

    #[test]
    fn well_formed_response_yields_labelled_variations() {
        let s = session();
        let w = s.window(2, 2);
        let v = parse_variations(TWO, 2, &w).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].target, "Can someone explain how photosynthesis works?");
        assert!(v.iter().all(|x| x.ut == UtteranceType::Q && x.rc4 == Rc4::Srd));
        assert!(v.iter().all(|x| x.provenance == Provenance::Synthetic));
        assert_eq!(v[1].source, w.target.reference());
        assert_eq!(v[0].shape(), w.shape());
    }

    #[test]
    fn fenced_response_is_rejected() {
        let s = session();
        let fenced = format!("```json\n{TWO}\n```");
        assert_eq!(parse_variations(&fenced, 2, &s.window(2, 2)), Err(Rejection::MarkdownFence));
    }

    #[test]
    fn wrong_count_shape_and_target() {
        let s = session();
        let w = s.window(2, 2);
        assert_eq!(
            parse_variations(TWO, 3, &w),
            Err(Rejection::CountMismatch { expected: 3, found: 2 })
        );
        assert!(matches!(
            parse_variations(TWO, 2, &s.window(2, 1)),
            Err(Rejection::ShapeMismatch { index: 0, expected_before: 1, found_before: 2, .. })
        ));
        let empty = r#"[{"before": ["a", "b"], "target": "  ", "after": ["c", "d"]}]"#;
        assert_eq!(parse_variations(empty, 1, &w), Err(Rejection::EmptyTarget { index: 0 }));
        assert!(matches!(parse_variations("[{", 1, &w), Err(Rejection::MalformedJson(_))));
        assert_eq!(parse_variations(r#"{"target": "x"}"#, 1, &w), Err(Rejection::NotAnArray));
        assert!(matches!(
            parse_variations(r#"[{"target": "x"}]"#, 1, &w),
            Err(Rejection::MalformedElement { index: 0, .. })
        ));
        assert_eq!(parse_variations(TWO, 2, &s.window(1, 2)), Err(Rejection::UnlabeledSource));
    }

    #[test]
    fn bare_window_expects_empty_context() {
        let s = session();
        let w = s.window(2, 0);
        let ok = r#"[{"before": [], "target": "Why do leaves need light?", "after": []}]"#;
        assert_eq!(parse_variations(ok, 1, &w).unwrap().len(), 1);
    }
}
