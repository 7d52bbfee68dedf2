//! Project configuration loaded from TOML.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use discourse_core::analytics::AnalysisConfig;
use discourse_core::augment::DEFAULT_RHO;
use discourse_core::baseline::{ClassWeighting, LossKind, TokenizerConfig, TrainConfig};
use discourse_core::split::{SplitRatio, SplitTask};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectConfig {
    pub data: DataConfig,
    pub windows: WindowConfig,
    pub split: SplitConfig,
    pub augment: AugmentSettings,
    pub classifier: ClassifierConfig,
    pub analysis: AnalysisConfig,
    pub service: ServiceConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Labelled transcript files.
    pub inputs: Vec<PathBuf>,
    /// Transcripts without labels, for pseudo-labelling.
    pub unlabeled: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowConfig {
    /// Turns of context on each side of a target.
    pub k: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig { k: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub ratio: SplitRatio,
    pub task: SplitTask,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            ratio: SplitRatio([6, 2, 1]),
            task: SplitTask::Rc4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentSettings {
    pub rho: f64,
    /// Second-pass expansion factor.
    pub scale: f64,
    pub boost: bool,
    pub seed: u64,
}

impl Default for AugmentSettings {
    fn default() -> Self {
        AugmentSettings {
            rho: DEFAULT_RHO,
            scale: 1.0,
            boost: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub l2: f64,
    pub loss: LossKind,
    pub class_weighting: ClassWeighting,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub lowercase: bool,
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        let tok = TokenizerConfig::default();
        ClassifierConfig {
            l2: t.l2,
            loss: t.loss,
            class_weighting: t.class_weighting,
            max_iterations: t.max_iterations,
            tolerance: t.tolerance,
            lowercase: tok.lowercase,
            ngram_min: tok.ngram_range.0,
            ngram_max: tok.ngram_range.1,
            seed: t.seed,
        }
    }
}

impl ClassifierConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            l2: self.l2,
            loss: self.loss,
            class_weighting: self.class_weighting,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            seed: self.seed,
        }
    }

    pub fn tokenizer(&self) -> TokenizerConfig {
        TokenizerConfig {
            lowercase: self.lowercase,
            ngram_range: (self.ngram_min, self.ngram_max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    /// Chat-completions endpoint root, e.g. `https://host/v1`.
    pub base_url: Option<String>,
    /// `--model` overrides it.
    pub model: Option<String>,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub cache_dir: PathBuf,
    /// Serve only cached responses; uncached requests fail.
    pub replay_only: bool,
    pub timeout_secs: u64,
    /// External pseudo-labelling program, run as `<program> --input <in> --output <out>`.
    pub pseudo_label_command: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            base_url: None,
            model: None,
            api_key_env: "DISCOURSE_LLM_API_KEY".into(),
            cache_dir: PathBuf::from(".discourse-cache"),
            replay_only: false,
            timeout_secs: 120,
            pseudo_label_command: None,
        }
    }
}

impl ProjectConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let config: ProjectConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    /// Every referenced data path must exist.
    pub fn validate(&self) -> anyhow::Result<()> {
        for p in self.data.inputs.iter().chain(&self.data.unlabeled) {
            if !p.exists() {
                bail!("configured path {} does not exist", p.display());
            }
        }
        if self.classifier.ngram_min == 0 || self.classifier.ngram_min > self.classifier.ngram_max {
            bail!("ngram range must satisfy 1 <= ngram_min <= ngram_max");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = ProjectConfig::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(toml::from_str::<ProjectConfig>(&text).unwrap(), c);
    }

    #[test]
    fn partial_files_fill_in_defaults() {
        let c: ProjectConfig = toml::from_str(
            "[split]\nratio = [7, 1, 1]\ntask = \"UT\"\n[analysis]\nn_bins = 5\n[classifier.loss]\nkind = \"focal\"\ngamma = 2.0\n",
        )
        .unwrap();
        assert_eq!(c.split.ratio, SplitRatio([7, 1, 1]));
        assert_eq!(c.split.task, SplitTask::Ut);
        assert_eq!(c.analysis.n_bins, 5);
        assert_eq!(c.analysis.min_n, 5);
        assert_eq!(c.classifier.loss, LossKind::Focal { gamma: 2.0 });
        assert!(toml::from_str::<ProjectConfig>("[split]\nbogus = 1\n").is_err());
    }

    #[test]
    fn missing_paths_fail_validation() {
        let mut c = ProjectConfig::default();
        c.data.inputs.push(PathBuf::from("/definitely/not/here.jsonl"));
        assert!(c.validate().is_err());
    }
}
