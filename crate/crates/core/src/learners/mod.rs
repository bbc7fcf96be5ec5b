//! The three classifiers and a common prediction interface.

mod forest;
mod logistic;
mod tree;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::StandardizationStats;

pub use forest::{train_forest, ForestConfig, ForestModel};
pub use logistic::{nll_and_gradient, sigmoid, train_logistic, train_logistic_traced, LogisticConfig, LogisticModel};
pub use tree::{gini, train_tree, TreeConfig, TreeModel, TreeNode};

/// Scores at or above this are class 1.
pub const THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logistic,
    Tree,
    Forest,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Logistic, ModelKind::Tree, ModelKind::Forest];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Logistic => "logistic",
            ModelKind::Tree => "tree",
            ModelKind::Forest => "forest",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            ModelKind::Logistic => "Logistic Regression",
            ModelKind::Tree => "Decision Tree",
            ModelKind::Forest => "Random Forest",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "logistic" | "lr" => Ok(ModelKind::Logistic),
            "tree" | "dt" => Ok(ModelKind::Tree),
            "forest" | "rf" => Ok(ModelKind::Forest),
            other => Err(format!("unknown model `{other}` (expected logistic | tree | forest)")),
        }
    }
}

/// Hyperparameters for all three learners.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    pub logistic: LogisticConfig,
    pub tree: TreeConfig,
    pub forest: ForestConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Logistic(LogisticModel),
    Tree(TreeModel),
    Forest(ForestModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Logistic(_) => ModelKind::Logistic,
            Model::Tree(_) => ModelKind::Tree,
            Model::Forest(_) => ModelKind::Forest,
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Logistic(m) => m.n_features(),
            Model::Tree(m) => m.n_features,
            Model::Forest(m) => m.n_features,
        }
    }

    /// Probability-like score in `[0, 1]`.
    pub fn predict_score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features() {
            return Err(Error::Dimension {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        Ok(match self {
            Model::Logistic(m) => m.score(x),
            Model::Tree(m) => m.score(x),
            Model::Forest(m) => m.score(x),
        })
    }

    /// `score >= 0.5`; an exact 0.5 is class 1.
    pub fn predict(&self, x: &[f64]) -> Result<u8> {
        self.predict_score(x).map(|s| u8::from(s >= THRESHOLD))
    }
}

/// Trains one learner. `seed` only affects the forest.
pub fn train(kind: ModelKind, x: &[Vec<f64>], y: &[u8], cfg: &LearnerConfig, seed: u64) -> Result<Model> {
    Ok(match kind {
        ModelKind::Logistic => Model::Logistic(train_logistic(x, y, &cfg.logistic)?),
        ModelKind::Tree => Model::Tree(train_tree(x, y, &cfg.tree)?),
        ModelKind::Forest => {
            let fc = ForestConfig {
                seed,
                ..cfg.forest.clone()
            };
            Model::Forest(train_forest(x, y, &fc)?)
        }
    })
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Versioned on-disk model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub feature_columns: Vec<String>,
    /// Scaling fitted on the training rows; apply it before predicting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardizer: Option<StandardizationStats>,
    pub model: Model,
}

impl ModelDocument {
    pub fn new(model: Model, feature_columns: Vec<String>) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            feature_columns,
            standardizer: None,
            model,
        }
    }

    pub fn with_standardizer(mut self, stats: StandardizationStats) -> Self {
        self.standardizer = Some(stats);
        self
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::ingest::write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: ModelDocument = serde_json::from_str(&text)?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported model format version {}",
                doc.format_version
            )));
        }
        Ok(doc)
    }
}
