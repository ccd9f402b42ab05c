use super::forward::forward_inputs;
use super::{ModelConfig, ModelParams};
use crate::data::AlignedSeries;
use crate::error::{Error, Result};
use crate::structure::AdjacencyMatrix;

/// K predictions for step `t + τ` (0-based `t`), running the model from a
/// zeroed state over at most the last L steps up to and including `t`.
pub fn predict(
    series: &AlignedSeries,
    t: usize,
    adjacency: &AdjacencyMatrix,
    params: &ModelParams,
    config: &ModelConfig,
) -> Result<Vec<f64>> {
    if (series.nodes(), series.features()) != (config.nodes, config.features) {
        return Err(Error::Shape(format!(
            "series is {}x{}, model expects {}x{}",
            series.nodes(),
            series.features(),
            config.nodes,
            config.features
        )));
    }
    if t >= series.steps() {
        return Err(Error::Data(format!("step {t} out of range for {} steps", series.steps())));
    }
    if t + 1 < config.context {
        return Err(Error::Data(format!(
            "step {t} precedes the decoder context of {} steps",
            config.context
        )));
    }
    let start = (t + 1).saturating_sub(config.window);
    if let Some(bad) = (start..=t).find(|&s| !series.step_valid(s)) {
        return Err(Error::Data(format!("step {bad} is masked")));
    }
    let inputs: Vec<_> = (start..=t).map(|s| series.step_matrix(s)).collect();
    let (mut preds, _) = forward_inputs(&inputs, adjacency, params, config)?;
    Ok(preds.pop().expect("at least one prediction"))
}
