use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::DatasetFormat;
use crate::error::{Error, Result};
use crate::llm_bridge::{ChatMode, PromptTemplate};
use crate::matching::DEFAULT_THRESHOLD;
use crate::metrics::{DEFAULT_CUTOFF, DEFAULT_HEAD_FRACTION};
use crate::recommenders::{ModelConfig, ModelKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Full,
    ColdStart,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Full => "full",
            Scenario::ColdStart => "cold-start",
        })
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Scenario::Full),
            "cold-start" => Ok(Scenario::ColdStart),
            _ => Err(Error::InvalidArgument(format!("unknown scenario {s:?}"))),
        }
    }
}

/// How the cold-start scenario restricts users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColdStartMode {
    /// Evaluate only users whose train profile has at most `max` items.
    #[default]
    Filter,
    /// Keep every user but cut train profiles to their last `max` items.
    Truncate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ItemsFormat {
    /// MovieLens `u.item`.
    Movielens,
    /// `item_id \t name`.
    #[default]
    Names,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub id: String,
    pub format: DatasetFormat,
    pub interactions: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub items: Option<PathBuf>,
    #[serde(default)]
    pub items_format: ItemsFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attributes: Option<PathBuf>,
    /// Expected sha256 per input path, as written in this manifest.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub checksums: BTreeMap<String, String>,
    #[serde(default = "defaults::kcore")]
    pub kcore: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub seed: u64,
    #[serde(default = "defaults::ratio")]
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSpec {
    #[serde(default = "defaults::cutoff")]
    pub cutoff: usize,
    #[serde(default = "defaults::head_fraction")]
    pub head_fraction: f64,
    #[serde(default = "defaults::scenario")]
    pub scenario: Scenario,
    #[serde(default = "defaults::cold_start_max")]
    pub cold_start_max: usize,
    #[serde(default)]
    pub cold_start_mode: ColdStartMode,
    #[serde(default = "defaults::alpha")]
    pub significance_level: f64,
    /// Evaluate a seeded sample of this many users instead of all of them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_sample: Option<usize>,
}

impl Default for EvaluationSpec {
    fn default() -> Self {
        Self {
            cutoff: defaults::cutoff(),
            head_fraction: defaults::head_fraction(),
            scenario: defaults::scenario(),
            cold_start_max: defaults::cold_start_max(),
            cold_start_mode: ColdStartMode::default(),
            significance_level: defaults::alpha(),
            user_sample: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningSpec {
    #[serde(default = "defaults::ratio")]
    pub validation_ratio: f64,
    pub seed: u64,
}

/// A baseline entry: either a fixed configuration or a kind to grid-tune.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Tune { tune: ModelKind },
    Fixed(ModelConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChatSpec {
    pub mode: ChatMode,
    /// Transcript cache directory.
    pub transcripts: PathBuf,
    #[serde(default = "defaults::in_flight")]
    pub max_in_flight: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmSpec {
    /// Row label in reports.
    pub label: String,
    /// Model name sent to the endpoint.
    pub model: String,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    pub prompt: PromptTemplate,
}

/// Everything needed to re-run an evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    #[serde(default = "defaults::version")]
    pub tool_version: String,
    pub dataset: DatasetSpec,
    pub split: SplitSpec,
    #[serde(default)]
    pub evaluation: EvaluationSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuning: Option<TuningSpec>,
    #[serde(default)]
    pub models: Vec<ModelSpec>,
    #[serde(default = "defaults::threshold")]
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chat: Option<ChatSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub llm: Vec<LlmSpec>,
    /// Where stage artifacts go.
    #[serde(default = "defaults::output")]
    pub output: PathBuf,
    /// Directory that relative paths resolve against; the manifest's own
    /// directory when loaded from a file.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

mod defaults {
    use super::*;

    pub fn kcore() -> usize {
        10
    }
    pub fn ratio() -> f64 {
        0.2
    }
    pub fn cutoff() -> usize {
        DEFAULT_CUTOFF
    }
    pub fn head_fraction() -> f64 {
        DEFAULT_HEAD_FRACTION
    }
    pub fn scenario() -> Scenario {
        Scenario::Full
    }
    pub fn cold_start_max() -> usize {
        10
    }
    pub fn alpha() -> f64 {
        0.05
    }
    pub fn in_flight() -> usize {
        4
    }
    pub fn threshold() -> f64 {
        DEFAULT_THRESHOLD
    }
    pub fn version() -> String {
        env!("CARGO_PKG_VERSION").to_string()
    }
    pub fn output() -> PathBuf {
        PathBuf::from("run")
    }
}

impl RunManifest {
    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut m: RunManifest = toml::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        m.base_dir = base_dir.into();
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, base).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.dataset.kcore == 0 {
            return bad("dataset.kcore must be >= 1".into());
        }
        if !(self.split.ratio > 0.0 && self.split.ratio < 1.0) {
            return bad(format!("split.ratio must lie in (0, 1), got {}", self.split.ratio));
        }
        if self.evaluation.cutoff == 0 {
            return bad("evaluation.cutoff must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return bad(format!("threshold must lie in [0, 1], got {}", self.threshold));
        }
        if !(0.0..1.0).contains(&self.evaluation.significance_level) {
            return bad("evaluation.significance_level must lie in [0, 1)".into());
        }
        for m in &self.models {
            match m {
                ModelSpec::Fixed(c) => c.validate()?,
                ModelSpec::Tune { tune } => {
                    if self.tuning.is_none() {
                        return bad(format!("model {tune} asks for tuning but [tuning] is missing"));
                    }
                }
            }
        }
        if !self.llm.is_empty() && self.chat.is_none() {
            return bad("[[llm]] entries need a [chat] section".into());
        }
        let mut labels = std::collections::BTreeSet::new();
        for l in &self.llm {
            if !labels.insert(&l.label) {
                return bad(format!("duplicate llm label {:?}", l.label));
            }
        }
        if self.models.is_empty() && self.llm.is_empty() {
            return bad("manifest lists no models".into());
        }
        Ok(())
    }
}
