use super::AlignedSeries;
use crate::error::{Error, Result};
use crate::numkit::Matrix;

/// One supervised window: L input steps and, for each emitting step
/// t = m..=L, the K targets τ steps after it.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowBatch {
    /// Series step of the first input.
    pub start: usize,
    /// L matrices of shape `K x F`.
    pub inputs: Vec<Matrix>,
    /// `L - m + 1` rows of K targets.
    pub targets: Vec<Vec<f64>>,
    pub target_mask: Vec<Vec<bool>>,
}

impl WindowBatch {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Target row for the window's last step.
    pub fn last_targets(&self) -> Option<(&[f64], &[bool])> {
        Some((self.targets.last()?, self.target_mask.last()?))
    }
}

/// Stride-1 windows of length `window` with targets `horizon` steps ahead,
/// emitting from step `context`. A window is kept only when every node is
/// valid from its first input through its last target, so windows never
/// straddle a masked gap.
pub fn window(
    series: &AlignedSeries,
    window: usize,
    horizon: usize,
    context: usize,
) -> Result<Vec<WindowBatch>> {
    if window == 0 || context == 0 || context > window || horizon == 0 {
        return Err(Error::Config(format!(
            "invalid window shape L={window}, m={context}, tau={horizon}"
        )));
    }
    let span = window + horizon;
    let mut out = Vec::new();
    for range in series.valid_spans() {
        if range.len() < span {
            continue;
        }
        for s in range.start..=range.end - span {
            out.push(cut(series, s, window, horizon, context));
        }
    }
    Ok(out)
}

fn cut(series: &AlignedSeries, s: usize, window: usize, horizon: usize, context: usize) -> WindowBatch {
    let k = series.nodes();
    let inputs = (s..s + window).map(|t| series.step_matrix(t)).collect();
    let targets = (context..=window)
        .map(|t| {
            let at = s + t - 1 + horizon;
            (0..k).map(|node| series.target(at, node)).collect()
        })
        .collect();
    WindowBatch {
        start: s,
        inputs,
        targets,
        target_mask: vec![vec![true; k]; window + 1 - context],
    }
}

/// Chronological train/validation/test split. Train and validation get
/// `round(r * T)` steps, test the remainder; every part must hold at least
/// `min_len` steps.
pub fn split(
    series: &AlignedSeries,
    ratios: [f64; 3],
    min_len: usize,
) -> Result<(AlignedSeries, AlignedSeries, AlignedSeries)> {
    if ratios.iter().any(|r| !(r.is_finite() && *r > 0.0))
        || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9
    {
        return Err(Error::Config(format!(
            "split ratios {ratios:?} must be positive and sum to 1"
        )));
    }
    let t = series.steps();
    let n_train = (ratios[0] * t as f64).round() as usize;
    let n_val = (ratios[1] * t as f64).round() as usize;
    let n_test = t.saturating_sub(n_train + n_val);
    for (name, n) in [("train", n_train), ("validation", n_val), ("test", n_test)] {
        if n < min_len.max(1) {
            return Err(Error::Data(format!(
                "{name} split has {n} steps, needs at least {min_len} (series has {t})"
            )));
        }
    }
    Ok((
        series.slice(0..n_train)?,
        series.slice(n_train..n_train + n_val)?,
        series.slice(n_train + n_val..t)?,
    ))
}
