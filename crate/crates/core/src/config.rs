use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embed::RemoteConfig;
use crate::error::{Error, Result};
use crate::tgnn::TgnnDims;
use crate::train::{AdamConfig, LossConfig, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    #[default]
    Hash,
    Remote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    #[default]
    Link,
    EdgeClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub nodes: PathBuf,
    pub edges: PathBuf,
    /// Labeled pairs; when absent, pairs come from the graph's own edges.
    pub pairs: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub checkpoint: PathBuf,
    pub log: PathBuf,
    /// Directory for documents and metric reports.
    pub output: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            nodes: "nodes.jsonl".into(),
            edges: "edges.jsonl".into(),
            pairs: None,
            cache: None,
            checkpoint: "model.ckpt".into(),
            log: "train_log.jsonl".into(),
            output: "out".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub paths: Paths,
    pub k: usize,
    /// Depth of the document trees; `K / 2` when unset.
    pub tree_depth: Option<usize>,
    pub dims: TgnnDims,
    pub loss: LossConfig,
    pub adam: AdamConfig,
    pub batch_size: usize,
    pub epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub provider: ProviderKind,
    pub remote: RemoteConfig,
    pub include_node_text: bool,
    pub task: Task,
    /// Sampled negatives per ranking query.
    pub ranking_negatives: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        RunConfig {
            paths: Paths::default(),
            k: train.k,
            tree_depth: None,
            dims: TgnnDims::default(),
            loss: train.loss,
            adam: train.adam,
            batch_size: train.batch_size,
            epochs: train.epochs,
            patience: train.patience,
            seed: train.seed,
            provider: ProviderKind::Hash,
            remote: RemoteConfig::default(),
            include_node_text: false,
            task: Task::Link,
            ranking_negatives: 100,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_json(&text)
    }

    pub fn doc_depth(&self) -> usize {
        self.tree_depth.unwrap_or(self.k / 2)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dims;
        if [d.d_h, d.d_node, d.d_edge, d.d_doc, d.n_out].contains(&0) {
            return Err(Error::InvalidArgument("all dimensions must be at least 1".into()));
        }
        if self.k < 2 {
            return Err(Error::InvalidArgument(format!("K must be at least 2, got {}", self.k)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        if self.task == Task::Link && d.n_out != 1 {
            return Err(Error::InvalidArgument("link prediction uses a single output".into()));
        }
        self.loss.validate()
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            loss: self.loss.clone(),
            adam: self.adam,
            batch_size: self.batch_size,
            epochs: self.epochs,
            patience: self.patience,
            seed: self.seed,
            k: self.k,
        }
    }
}
