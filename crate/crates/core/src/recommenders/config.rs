use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Random,
    MostPop,
    ItemKnn,
    UserKnn,
    AttributeItemKnn,
    AttributeUserKnn,
    Vsm,
    Rp3Beta,
    Ease,
    Mf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 10] = [
        ModelKind::Random,
        ModelKind::MostPop,
        ModelKind::ItemKnn,
        ModelKind::UserKnn,
        ModelKind::AttributeItemKnn,
        ModelKind::AttributeUserKnn,
        ModelKind::Vsm,
        ModelKind::Rp3Beta,
        ModelKind::Ease,
        ModelKind::Mf,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ModelKind::Random => "random",
            ModelKind::MostPop => "most-pop",
            ModelKind::ItemKnn => "item-knn",
            ModelKind::UserKnn => "user-knn",
            ModelKind::AttributeItemKnn => "attribute-item-knn",
            ModelKind::AttributeUserKnn => "attribute-user-knn",
            ModelKind::Vsm => "vsm",
            ModelKind::Rp3Beta => "rp3-beta",
            ModelKind::Ease => "ease",
            ModelKind::Mf => "mf",
        }
    }

    /// Display name used in reports.
    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Random => "Random",
            ModelKind::MostPop => "MostPop",
            ModelKind::ItemKnn => "ItemKNN",
            ModelKind::UserKnn => "UserKNN",
            ModelKind::AttributeItemKnn => "AttributeItemKNN",
            ModelKind::AttributeUserKnn => "AttributeUserKNN",
            ModelKind::Vsm => "VSM",
            ModelKind::Rp3Beta => "RP3beta",
            ModelKind::Ease => "EASE",
            ModelKind::Mf => "MF2020",
        }
    }

    pub fn needs_attributes(self) -> bool {
        matches!(
            self,
            ModelKind::AttributeItemKnn | ModelKind::AttributeUserKnn | ModelKind::Vsm
        )
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|k| k.tag() == lower || k.display_name().to_ascii_lowercase() == lower)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model kind {s:?}")))
    }
}

/// Hyperparameters of the logistic matrix factorization model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MfConfig {
    pub factors: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub negatives: usize,
    #[serde(default = "MfConfig::default_regularization")]
    pub regularization: f64,
    #[serde(default = "MfConfig::default_init_std")]
    pub init_std: f64,
    #[serde(default)]
    pub seed: u64,
}

impl MfConfig {
    fn default_regularization() -> f64 {
        0.005
    }

    fn default_init_std() -> f64 {
        0.1
    }
}

impl Default for MfConfig {
    fn default() -> Self {
        Self {
            factors: 64,
            learning_rate: 0.05,
            epochs: 20,
            negatives: 4,
            regularization: Self::default_regularization(),
            init_std: Self::default_init_std(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    Random {
        #[serde(default)]
        seed: u64,
    },
    MostPop,
    ItemKnn {
        neighbors: usize,
    },
    UserKnn {
        neighbors: usize,
    },
    AttributeItemKnn {
        neighbors: usize,
    },
    AttributeUserKnn {
        neighbors: usize,
    },
    Vsm,
    Rp3Beta {
        alpha: f64,
        beta: f64,
    },
    Ease {
        lambda: f64,
    },
    Mf(MfConfig),
}

impl ModelConfig {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::Random { .. } => ModelKind::Random,
            ModelConfig::MostPop => ModelKind::MostPop,
            ModelConfig::ItemKnn { .. } => ModelKind::ItemKnn,
            ModelConfig::UserKnn { .. } => ModelKind::UserKnn,
            ModelConfig::AttributeItemKnn { .. } => ModelKind::AttributeItemKnn,
            ModelConfig::AttributeUserKnn { .. } => ModelKind::AttributeUserKnn,
            ModelConfig::Vsm => ModelKind::Vsm,
            ModelConfig::Rp3Beta { .. } => ModelKind::Rp3Beta,
            ModelConfig::Ease { .. } => ModelKind::Ease,
            ModelConfig::Mf(_) => ModelKind::Mf,
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind().display_name()
    }

    /// Checks every hyperparameter against its valid range.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(format!("{}: {msg}", self.name())));
        match self {
            ModelConfig::ItemKnn { neighbors }
            | ModelConfig::UserKnn { neighbors }
            | ModelConfig::AttributeItemKnn { neighbors }
            | ModelConfig::AttributeUserKnn { neighbors } => {
                if *neighbors == 0 {
                    return bad("neighbors must be >= 1".into());
                }
            }
            ModelConfig::Rp3Beta { alpha, beta } => {
                if !(alpha.is_finite() && *alpha >= 0.0) {
                    return bad(format!("alpha must be >= 0, got {alpha}"));
                }
                if !(beta.is_finite() && *beta >= 0.0) {
                    return bad(format!("beta must be >= 0, got {beta}"));
                }
            }
            ModelConfig::Ease { lambda } => {
                if !(lambda.is_finite() && *lambda > 0.0) {
                    return bad(format!("lambda must be > 0, got {lambda}"));
                }
            }
            ModelConfig::Mf(c) => {
                if c.factors == 0 {
                    return bad("factors must be >= 1".into());
                }
                if c.epochs == 0 {
                    return bad("epochs must be >= 1".into());
                }
                if !(c.learning_rate.is_finite() && c.learning_rate > 0.0) {
                    return bad(format!("learning rate must be > 0, got {}", c.learning_rate));
                }
                if !(c.regularization.is_finite() && c.regularization >= 0.0) {
                    return bad(format!("regularization must be >= 0, got {}", c.regularization));
                }
                if !(c.init_std.is_finite() && c.init_std >= 0.0) {
                    return bad(format!("init_std must be >= 0, got {}", c.init_std));
                }
            }
            ModelConfig::Random { .. } | ModelConfig::MostPop | ModelConfig::Vsm => {}
        }
        Ok(())
    }

    /// First 12 hex digits of the sha256 of the canonical JSON encoding.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("model configs always serialize");
        hex::encode(Sha256::digest(json.as_bytes()))[..12].to_string()
    }
}

/// Default tuning grid for a model kind. Random and MostPop and VSM have no
/// hyperparameters and yield a single point.
pub fn default_grid(kind: ModelKind, seed: u64) -> Vec<ModelConfig> {
    const NEIGHBORS: [usize; 5] = [10, 50, 100, 200, 500];
    const BETAS: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
    match kind {
        ModelKind::Random => vec![ModelConfig::Random { seed }],
        ModelKind::MostPop => vec![ModelConfig::MostPop],
        ModelKind::Vsm => vec![ModelConfig::Vsm],
        ModelKind::ItemKnn => NEIGHBORS.map(|neighbors| ModelConfig::ItemKnn { neighbors }).to_vec(),
        ModelKind::UserKnn => NEIGHBORS.map(|neighbors| ModelConfig::UserKnn { neighbors }).to_vec(),
        ModelKind::AttributeItemKnn => NEIGHBORS
            .map(|neighbors| ModelConfig::AttributeItemKnn { neighbors })
            .to_vec(),
        ModelKind::AttributeUserKnn => NEIGHBORS
            .map(|neighbors| ModelConfig::AttributeUserKnn { neighbors })
            .to_vec(),
        ModelKind::Rp3Beta => [0.5, 1.0]
            .into_iter()
            .flat_map(|alpha| BETAS.map(|beta| ModelConfig::Rp3Beta { alpha, beta }))
            .collect(),
        ModelKind::Ease => [1.0, 10.0, 100.0, 1000.0]
            .map(|lambda| ModelConfig::Ease { lambda })
            .to_vec(),
        ModelKind::Mf => {
            let mut grid = Vec::new();
            for factors in [16, 64] {
                for learning_rate in [0.01, 0.05] {
                    grid.push(ModelConfig::Mf(MfConfig {
                        factors,
                        learning_rate,
                        negatives: 4,
                        seed,
                        ..MfConfig::default()
                    }));
                }
            }
            grid
        }
    }
}
