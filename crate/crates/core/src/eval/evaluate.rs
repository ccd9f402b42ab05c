use super::report::{MetricsReport, Predictions};
use crate::data::{AlignedSeries, NormStats, WindowBatch};
use crate::error::{Error, Result};
use crate::model::{forward_window, ModelConfig, ModelParams};
use crate::structure::AdjacencyMatrix;

/// Scale on which metrics are computed.
#[derive(Debug, Clone, Copy)]
pub enum Scale<'a> {
    Normalized,
    /// Map predictions and targets of `feature` back to raw units.
    Raw { stats: &'a NormStats, feature: usize },
}

impl Scale<'_> {
    pub fn is_raw(&self) -> bool {
        matches!(self, Scale::Raw { .. })
    }

    pub(crate) fn apply(&self, row: &mut [f64]) {
        if let Scale::Raw { stats, feature } = *self {
            for (k, v) in row.iter_mut().enumerate() {
                *v = stats.denormalize(k, feature, *v);
            }
        }
    }
}

/// Last-step prediction of every window, with `offset` added to the
/// reported step.
pub fn predict_windows(
    windows: &[WindowBatch],
    adjacency: &AdjacencyMatrix,
    params: &ModelParams,
    config: &ModelConfig,
    scale: Scale<'_>,
    offset: usize,
) -> Result<Predictions> {
    let mut out = Predictions::default();
    for w in windows {
        let (mut preds, _) = forward_window(w, adjacency, params, config)?;
        let mut p = preds.pop().expect("window emits predictions");
        let (y, m) = w.last_targets().expect("window has targets");
        let mut y = y.to_vec();
        scale.apply(&mut p);
        scale.apply(&mut y);
        out.push(offset + w.start + w.len() - 1, p, y, m.to_vec());
    }
    Ok(out)
}

/// Evaluate a model on the last-step prediction of each window.
pub fn evaluate(
    params: &ModelParams,
    config: &ModelConfig,
    adjacency: &AdjacencyMatrix,
    windows: &[WindowBatch],
    tasks: &[String],
    scale: Scale<'_>,
) -> Result<(MetricsReport, Predictions)> {
    if tasks.len() != config.nodes || adjacency.k() != config.nodes {
        return Err(Error::Shape("model, adjacency and task list disagree on K".into()));
    }
    let clock = std::time::Instant::now();
    let preds = predict_windows(windows, adjacency, params, config, scale, 0)?;
    let mut report = preds.report("model", tasks, scale.is_raw())?;
    report.seed = config.seed;
    report.wall_clock = clock.elapsed();
    Ok((report, preds))
}

/// Persistence forecast `ŷ_{t+τ} = y_t` at every step `t` where both the
/// node's step `t` and `t + τ` are valid.
pub fn baseline_persistence(series: &AlignedSeries, horizon: usize) -> Result<Predictions> {
    let (k, t_len) = (series.nodes(), series.steps());
    let mut out = Predictions::default();
    for t in 0..t_len.saturating_sub(horizon) {
        let preds: Vec<f64> = (0..k)
            .map(|n| if series.is_valid(t, n) { series.target(t, n) } else { 0.0 })
            .collect();
        let targets: Vec<f64> = (0..k)
            .map(|n| if series.is_valid(t + horizon, n) { series.target(t + horizon, n) } else { 0.0 })
            .collect();
        let mask = (0..k).map(|n| series.is_valid(t, n) && series.is_valid(t + horizon, n)).collect();
        out.push(t, preds, targets, mask);
    }
    Ok(out)
}

/// Persistence on exactly the samples a model is scored on: the last input's
/// target feature carried forward to each window's last target.
pub fn persistence_windows(windows: &[WindowBatch], target_feature: usize, scale: Scale<'_>) -> Predictions {
    let mut out = Predictions::default();
    for w in windows {
        let last = w.inputs.last().expect("non-empty window");
        let mut p: Vec<f64> = (0..last.rows()).map(|k| last.get(k, target_feature)).collect();
        let (y, m) = w.last_targets().expect("window has targets");
        let mut y = y.to_vec();
        scale.apply(&mut p);
        scale.apply(&mut y);
        out.push(w.start + w.len() - 1, p, y, m.to_vec());
    }
    out
}
