use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Decay of the fluctuation-intensity EWMA driving the dynamic gate.
pub const FLUCTUATION_DECAY: f64 = 0.9;

/// Shape and behavior of one forecaster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Node/task count K.
    pub nodes: usize,
    /// Raw features per node F.
    pub features: usize,
    /// Hidden width d.
    pub hidden: usize,
    /// Width of the shared decoder trunk; defaults to `hidden`.
    #[serde(default)]
    pub decoder_hidden: Option<usize>,
    /// Number of past hidden matrices the decoder reads (m).
    pub context: usize,
    /// Prediction offset τ.
    pub horizon: usize,
    /// Training window length L.
    pub window: usize,
    #[serde(default = "yes")]
    pub use_graph: bool,
    #[serde(default = "yes")]
    pub use_fusion: bool,
    #[serde(default = "yes")]
    pub use_dynamic: bool,
    /// Per-task loss weights; normalized to sum to K by [`ModelConfig::validate`].
    #[serde(default)]
    pub task_weights: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
}

fn yes() -> bool {
    true
}

impl ModelConfig {
    /// Defaults for a `nodes x features` problem: d = 16, m = 2, τ = 1, L = 12.
    pub fn new(nodes: usize, features: usize) -> Self {
        ModelConfig {
            nodes,
            features,
            hidden: 16,
            decoder_hidden: None,
            context: 2,
            horizon: 1,
            window: 12,
            use_graph: true,
            use_fusion: true,
            use_dynamic: true,
            task_weights: vec![1.0; nodes],
            seed: 0,
        }
    }

    pub fn decoder_width(&self) -> usize {
        self.decoder_hidden.unwrap_or(self.hidden)
    }

    /// Number of predictions one window of length L emits (steps m..=L).
    pub fn predictions_per_window(&self) -> usize {
        self.window + 1 - self.context
    }

    /// Check invariants and normalize task weights to sum K.
    pub fn validate(mut self) -> Result<Self> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.nodes == 0 || self.features == 0 {
            return fail("nodes and features must be positive".into());
        }
        if self.hidden == 0 || self.decoder_width() == 0 {
            return fail("hidden width must be positive".into());
        }
        if self.context == 0 {
            return fail("decoder context must be at least 1".into());
        }
        if self.window < self.context {
            return fail(format!(
                "window {} shorter than decoder context {}",
                self.window, self.context
            ));
        }
        if self.horizon == 0 {
            return fail("horizon must be at least 1".into());
        }
        if self.task_weights.is_empty() {
            self.task_weights = vec![1.0; self.nodes];
        }
        if self.task_weights.len() != self.nodes {
            return fail(format!(
                "{} task weights for {} tasks",
                self.task_weights.len(),
                self.nodes
            ));
        }
        if self.task_weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return fail("task weights must be positive".into());
        }
        let sum: f64 = self.task_weights.iter().sum();
        let k = self.nodes as f64;
        self.task_weights.iter_mut().for_each(|w| *w *= k / sum);
        Ok(self)
    }
}
