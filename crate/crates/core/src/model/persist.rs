use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelConfig, ModelParams};
use crate::artifact::{read_json, write_json};
use crate::data::NormStats;
use crate::error::{Error, Result};
use crate::numkit::ParamSet;
use crate::structure::AdjacencyMatrix;

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A trained model as stored on disk. Floats are written with 17
/// significant digits, so loading is bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SavedModel {
    pub format_version: u32,
    pub config: ModelConfig,
    pub adjacency: AdjacencyMatrix,
    #[serde(default)]
    pub stats: Option<NormStats>,
    pub params: ParamSet,
    /// Resolved run configuration that produced the model.
    #[serde(default)]
    pub run_config: Option<serde_json::Value>,
    #[serde(default)]
    pub config_hash: Option<String>,
}

impl SavedModel {
    pub fn new(config: ModelConfig, adjacency: AdjacencyMatrix, params: &ModelParams) -> Self {
        SavedModel {
            format_version: MODEL_FORMAT_VERSION,
            config,
            adjacency,
            stats: None,
            params: params.set().clone(),
            run_config: None,
            config_hash: None,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let m: SavedModel = read_json(path)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Data(format!(
                "{}: unsupported model format {}",
                path.display(),
                m.format_version
            )));
        }
        m.model_params()?;
        Ok(m)
    }

    /// Validated parameters.
    pub fn model_params(&self) -> Result<ModelParams> {
        let config = self.config.clone().validate()?;
        if self.adjacency.k() != config.nodes {
            return Err(Error::Shape("stored adjacency does not match node count".into()));
        }
        ModelParams::from_set(&config, self.params.clone())
    }
}
