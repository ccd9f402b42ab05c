use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::SynthConfig;
use crate::error::{Error, Result};
use crate::eval::{PrepareOptions, Variant};
use crate::model::{ModelConfig, TrainConfig};
use crate::structure::DEFAULT_THRESHOLD;

/// Model fields that do not depend on the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "d_hidden")]
    pub hidden: usize,
    #[serde(default)]
    pub decoder_hidden: Option<usize>,
    #[serde(default = "d_context")]
    pub context: usize,
    #[serde(default = "d_horizon")]
    pub horizon: usize,
    #[serde(default = "d_window")]
    pub window: usize,
    #[serde(default = "yes")]
    pub use_graph: bool,
    #[serde(default = "yes")]
    pub use_fusion: bool,
    #[serde(default = "yes")]
    pub use_dynamic: bool,
    #[serde(default)]
    pub task_weights: Vec<f64>,
}

fn d_hidden() -> usize {
    16
}
fn d_context() -> usize {
    2
}
fn d_horizon() -> usize {
    1
}
fn d_window() -> usize {
    12
}
fn yes() -> bool {
    true
}

impl Default for ModelSection {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

impl ModelSection {
    /// Full model config for a `nodes x features` series.
    pub fn resolve(&self, nodes: usize, features: usize, seed: u64) -> Result<ModelConfig> {
        ModelConfig {
            nodes,
            features,
            hidden: self.hidden,
            decoder_hidden: self.decoder_hidden,
            context: self.context,
            horizon: self.horizon,
            window: self.window,
            use_graph: self.use_graph,
            use_fusion: self.use_fusion,
            use_dynamic: self.use_dynamic,
            task_weights: self.task_weights.clone(),
            seed,
        }
        .validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjacencyMode {
    Topology,
    Correlation,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdjacencySection {
    #[serde(default = "d_mode")]
    pub mode: AdjacencyMode,
    /// Topology file; defaults to the data directory's `topology.json`.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default = "d_threshold")]
    pub threshold: f64,
}

fn d_mode() -> AdjacencyMode {
    AdjacencyMode::Correlation
}
fn d_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

impl Default for AdjacencySection {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// Winsorization quantiles; `null` disables clipping.
    #[serde(default = "d_clip")]
    pub clip: Option<[f64; 2]>,
    #[serde(default = "d_split")]
    pub split: [f64; 3],
}

fn d_clip() -> Option<[f64; 2]> {
    PrepareOptions::default().clip
}
fn d_split() -> [f64; 3] {
    PrepareOptions::default().split
}

impl DataSection {
    pub fn prepare_options(&self) -> PrepareOptions {
        PrepareOptions {
            clip: self.clip,
            split: self.split,
        }
    }
}

impl Default for DataSection {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    /// Compute metrics in raw units instead of normalized ones.
    #[serde(default)]
    pub denormalize: bool,
    #[serde(default = "d_dims")]
    pub hidden_dims: Vec<usize>,
    #[serde(default = "d_horizons")]
    pub horizons: Vec<usize>,
    #[serde(default = "d_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "d_variants")]
    pub variants: Vec<Variant>,
}

fn d_dims() -> Vec<usize> {
    vec![2, 8, 32, 128]
}
fn d_horizons() -> Vec<usize> {
    vec![1, 2, 4, 8]
}
fn d_seeds() -> Vec<u64> {
    vec![0, 1, 2]
}
fn d_variants() -> Vec<Variant> {
    Variant::ABLATIONS.to_vec()
}

impl Default for EvalSection {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Also write a CSV next to every JSON report.
    #[serde(default = "yes")]
    pub csv: bool,
}

/// One run's complete configuration. Unknown keys are rejected everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub synth: Option<SynthConfig>,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub adjacency: AdjacencySection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default = "d_output")]
    pub output: OutputSection,
}

fn d_output() -> OutputSection {
    OutputSection { csv: true }
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let c: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        c.train.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::Config(format!("config file {} not found", path.display())),
            _ => Error::io(path, e),
        })?;
        RunConfig::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// SHA-256 of the resolved configuration.
    pub fn hash(&self) -> Result<String> {
        crate::artifact::fingerprint(self)
    }
}
