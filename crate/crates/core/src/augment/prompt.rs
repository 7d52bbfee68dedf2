use alloc::format;
use alloc::string::String;
use core::fmt::Write;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::AugmentError;
use crate::corpus::ContextWindow;
use crate::taxonomy::{Code, Rc4, UtteranceType};

pub const AUGMENTATION_TEMPERATURE: f64 = 0.9;
pub const ZERO_SHOT_TEMPERATURE: f64 = 0.0;

/// Model and sampling settings attached to every request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationSettings {
    pub model: String,
    pub temperature: f64,
}

impl GenerationSettings {
    pub fn augmentation(model: impl Into<String>) -> Self {
        GenerationSettings {
            model: model.into(),
            temperature: AUGMENTATION_TEMPERATURE,
        }
    }

    pub fn zero_shot(model: impl Into<String>) -> Self {
        GenerationSettings {
            model: model.into(),
            temperature: ZERO_SHOT_TEMPERATURE,
        }
    }
}

/// A fully rendered request to the generative service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    pub variations: usize,
    pub model: String,
    pub temperature: f64,
    /// Hex SHA-256 over model, temperature, variation count and prompt.
    pub cache_key: String,
}

impl GenerationRequest {
    pub fn new(prompt: String, variations: usize, settings: &GenerationSettings) -> Self {
        let cache_key = cache_key(&settings.model, settings.temperature, variations, &prompt);
        GenerationRequest {
            prompt,
            variations,
            model: settings.model.clone(),
            temperature: settings.temperature,
            cache_key,
        }
    }

    /// The same request with a note about the previous rejection appended.
    pub fn with_feedback(&self, reason: &str) -> Self {
        let prompt = format!(
            "{}\n\n<feedback>\nYour previous response was rejected: {reason}. Follow the output format exactly.\n</feedback>",
            self.prompt
        );
        let settings = GenerationSettings {
            model: self.model.clone(),
            temperature: self.temperature,
        };
        GenerationRequest::new(prompt, self.variations, &settings)
    }
}

pub fn cache_key(model: &str, temperature: f64, variations: usize, prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update(model.as_bytes());
    h.update([0]);
    h.update(temperature.to_bits().to_le_bytes());
    h.update((variations as u64).to_le_bytes());
    h.update(prompt.as_bytes());
    let mut out = String::with_capacity(64);
    for b in h.finalize() {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Every UT and RC label with its name and definition.
pub fn label_definitions() -> String {
    let mut out = String::from("Utterance Type (UT) labels:\n");
    for &ut in UtteranceType::ALL {
        let _ = writeln!(out, "- {} ({}): {}", ut.code(), ut.name(), ut.description());
    }
    out.push_str("\nReasoning Component (RC) labels:\n");
    for (i, &rc) in Rc4::ALL.iter().enumerate() {
        let _ = write!(out, "- {} ({}): {}", rc.code(), rc.name(), rc.description());
        if i + 1 < Rc4::ALL.len() {
            out.push('\n');
        }
    }
    out
}

/// Renders a window as numbered `[i] Speaker: "text"` lines, with the target
/// turn wrapped in `***`.
pub fn render_snippet(window: &ContextWindow<'_>) -> String {
    let center = window.before.len();
    let mut out = String::new();
    for (i, u) in window.turns().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let line = format!("[{}] {}: \"{}\"", i + 1, u.speaker, u.text);
        if i == center {
            let _ = write!(out, "*** {line} ***");
        } else {
            out.push_str(&line);
        }
    }
    out
}

const TEMPLATE: &str = r#"<role>
You are a classroom discourse analyst specializing in science education dialogue patterns.
</role>

<task>
Generate {variations} distinct variations of a science classroom dialogue snippet.
Each variation must re-write the ENTIRE snippet (all {window} turns), not just the target utterance.
The target utterance is turn {center_1indexed} (marked with ***).
All other turns must flow naturally and coherently with the new target utterance.
</task>

<label_definitions>
{label_definitions}
</label_definitions>

<original_snippet>
{original_snippet}
</original_snippet>

<requirements>
1. Generate exactly {variations} complete snippet variations
2. In each variation, the target turn (turn {center_1indexed}) must preserve its discourse labels (UT: {label_ut}, RC: {label_rc}) and speaker ({speaker})
3. All surrounding turns must be rewritten so the dialogue flows naturally with the new target; do NOT copy surrounding turns verbatim from the original
4. Use different vocabulary, phrasing, and sentence structures across variations
5. Maintain scientific accuracy and classroom-appropriate language
6. Respond with ONLY valid JSON --- no prose, no markdown fences
</requirements>

<output_format>
[
  {
    "before": ["turn 1 text", "turn 2 text", ...],
    "target": "target turn text",
    "after":  ["turn N+1 text", "turn N+2 text", ...]
  },
  ...
]
</output_format>"#;

/// Fills the augmentation template for one window.
///
/// `{window}` is the number of turns actually present, which is smaller than
/// `2k + 1` when the target sits near a session edge.
pub fn build_augmentation_prompt(
    window: &ContextWindow<'_>,
    variations: usize,
    settings: &GenerationSettings,
) -> Result<GenerationRequest, AugmentError> {
    if variations == 0 {
        return Err(AugmentError::ZeroVariations);
    }
    let target = window.target;
    let (Some(ut), Some(rc)) = (target.ut, target.rc4) else {
        return Err(AugmentError::UnlabeledTarget(target.reference()));
    };
    let prompt = TEMPLATE
        .replace("{variations}", &format!("{variations}"))
        .replace("{window}", &format!("{}", window.shape().len()))
        .replace("{center_1indexed}", &format!("{}", window.before.len() + 1))
        .replace("{label_ut}", ut.code())
        .replace("{label_rc}", rc.code())
        .replace("{speaker}", target.speaker.as_str())
        .replace("{label_definitions}", &label_definitions())
        .replace("{original_snippet}", &render_snippet(window));
    Ok(GenerationRequest::new(prompt, variations, settings))
}
