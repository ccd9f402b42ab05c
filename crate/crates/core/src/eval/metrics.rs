use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Denominator floor for MAPE, in the units the metric is computed in.
pub const MAPE_EPSILON: f64 = 1e-3;
/// Denominator floor for RMAE when targets average to (near) zero.
pub const RMAE_EPSILON: f64 = 1e-3;
pub const RMAE_DEFINITION: &str = "MAE / max(mean |y|, 1e-3)";

fn valid_pairs<'a>(
    preds: &'a [f64],
    targets: &'a [f64],
    mask: &'a [bool],
) -> Result<impl Iterator<Item = (f64, f64)> + Clone + 'a> {
    if preds.len() != targets.len() || targets.len() != mask.len() {
        return Err(Error::Shape(format!(
            "{} predictions, {} targets, {} mask entries",
            preds.len(),
            targets.len(),
            mask.len()
        )));
    }
    if !mask.iter().any(|&m| m) {
        return Err(Error::Data("no valid prediction/target pairs".into()));
    }
    Ok(preds
        .iter()
        .zip(targets)
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|((&p, &y), _)| (p, y)))
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

pub fn mse(preds: &[f64], targets: &[f64], mask: &[bool]) -> Result<f64> {
    Ok(mean(valid_pairs(preds, targets, mask)?.map(|(p, y)| (p - y) * (p - y))))
}

pub fn mae(preds: &[f64], targets: &[f64], mask: &[bool]) -> Result<f64> {
    Ok(mean(valid_pairs(preds, targets, mask)?.map(|(p, y)| (p - y).abs())))
}

/// Percent error with the denominator floored at [`MAPE_EPSILON`].
pub fn mape(preds: &[f64], targets: &[f64], mask: &[bool]) -> Result<f64> {
    Ok(100.0
        * mean(valid_pairs(preds, targets, mask)?.map(|(p, y)| (p - y).abs() / y.abs().max(MAPE_EPSILON))))
}

/// Relative MAE: MAE over the mean absolute target.
pub fn rmae(preds: &[f64], targets: &[f64], mask: &[bool]) -> Result<f64> {
    let pairs = valid_pairs(preds, targets, mask)?;
    let scale = mean(pairs.clone().map(|(_, y)| y.abs())).max(RMAE_EPSILON);
    Ok(mean(pairs.map(|(p, y)| (p - y).abs())) / scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub mse: f64,
    pub mae: f64,
    /// Percent.
    pub mape: f64,
    pub rmae: f64,
    pub count: usize,
}

impl MetricSet {
    pub fn compute(preds: &[f64], targets: &[f64], mask: &[bool]) -> Result<MetricSet> {
        Ok(MetricSet {
            mse: mse(preds, targets, mask)?,
            mae: mae(preds, targets, mask)?,
            mape: mape(preds, targets, mask)?,
            rmae: rmae(preds, targets, mask)?,
            count: mask.iter().filter(|&&m| m).count(),
        })
    }

    /// Count-weighted mean of each metric.
    pub fn weighted_mean(sets: &[MetricSet]) -> Result<MetricSet> {
        let total: usize = sets.iter().map(|s| s.count).sum();
        if total == 0 {
            return Err(Error::Data("no valid samples to aggregate".into()));
        }
        let avg = |f: fn(&MetricSet) -> f64| {
            sets.iter().map(|s| f(s) * s.count as f64).sum::<f64>() / total as f64
        };
        Ok(MetricSet {
            mse: avg(|s| s.mse),
            mae: avg(|s| s.mae),
            mape: avg(|s| s.mape),
            rmae: avg(|s| s.rmae),
            count: total,
        })
    }
}
