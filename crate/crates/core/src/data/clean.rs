use serde::{Deserialize, Serialize};

use super::AlignedSeries;
use crate::error::{Error, Result};

pub const DEFAULT_P_LOW: f64 = 0.005;
pub const DEFAULT_P_HIGH: f64 = 0.995;

/// Standard deviations below this are treated as a constant feature.
pub const CONSTANT_STD: f64 = 1e-12;

/// Winsorize every `(node, feature)` column over its valid entries.
///
/// With `n` valid values sorted as `x_0 <= ... <= x_{n-1}`, the bounds are the
/// order statistics just inside the requested quantile positions:
/// `lo = x_⌈p_low (n-1)⌉` and `hi = x_⌊p_high (n-1)⌋`. Clipping to order
/// statistics leaves them in place, so a second pass changes nothing.
/// Columns too short for `lo <= hi` are left alone.
pub fn clip_outliers(series: &AlignedSeries, p_low: f64, p_high: f64) -> Result<AlignedSeries> {
    if !(0.0..=1.0).contains(&p_low) || !(0.0..=1.0).contains(&p_high) || p_low > p_high {
        return Err(Error::Config(format!(
            "clip quantiles ({p_low}, {p_high}) must satisfy 0 <= low <= high <= 1"
        )));
    }
    let mut out = series.clone();
    for k in 0..series.nodes() {
        for f in 0..series.features() {
            let mut col = series.valid_column(k, f);
            if col.is_empty() {
                continue;
            }
            col.sort_by(f64::total_cmp);
            let last = (col.len() - 1) as f64;
            let a = (p_low * last).ceil() as usize;
            let b = (p_high * last).floor() as usize;
            if a > b {
                continue;
            }
            let (lo, hi) = (col[a], col[b]);
            out.map_column(k, f, |v| v.clamp(lo, hi));
        }
    }
    Ok(out)
}

/// Per `(node, feature)` z-score parameters, fitted on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub nodes: usize,
    pub features: usize,
    /// `K x F`, row-major.
    pub mean: Vec<f64>,
    /// Population standard deviation; 1 for constant columns.
    pub std: Vec<f64>,
    pub constant: Vec<bool>,
}

impl NormStats {
    pub fn fit(train: &AlignedSeries) -> Result<NormStats> {
        let (k, f) = (train.nodes(), train.features());
        let mut mean = Vec::with_capacity(k * f);
        let mut std = Vec::with_capacity(k * f);
        let mut constant = Vec::with_capacity(k * f);
        for node in 0..k {
            for feat in 0..f {
                let col = train.valid_column(node, feat);
                if col.is_empty() {
                    return Err(Error::Data(format!(
                        "node {:?} has no valid training steps",
                        train.node_ids[node]
                    )));
                }
                let n = col.len() as f64;
                let m = col.iter().sum::<f64>() / n;
                let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
                let s = var.sqrt();
                let flat = s < CONSTANT_STD;
                mean.push(m);
                std.push(if flat { 1.0 } else { s });
                constant.push(flat);
            }
        }
        Ok(NormStats {
            nodes: k,
            features: f,
            mean,
            std,
            constant,
        })
    }

    fn check(&self, series: &AlignedSeries) -> Result<()> {
        if (self.nodes, self.features) != (series.nodes(), series.features())
            || self.mean.len() != self.nodes * self.features
            || self.std.len() != self.mean.len()
        {
            return Err(Error::Shape(format!(
                "norm stats are {}x{}, series is {}x{}",
                self.nodes,
                self.features,
                series.nodes(),
                series.features()
            )));
        }
        Ok(())
    }

    /// Map a normalized value of `(node, feature)` back to raw units.
    pub fn denormalize(&self, node: usize, feature: usize, v: f64) -> f64 {
        let i = node * self.features + feature;
        v * self.std[i] + self.mean[i]
    }

    pub fn apply(&self, series: &AlignedSeries) -> Result<AlignedSeries> {
        normalize(series, self)
    }
}

/// `(x - mean) / std` on every valid entry; constant columns are only centered.
pub fn normalize(series: &AlignedSeries, stats: &NormStats) -> Result<AlignedSeries> {
    stats.check(series)?;
    let mut out = series.clone();
    for k in 0..series.nodes() {
        for f in 0..series.features() {
            let i = k * stats.features + f;
            let (m, s) = (stats.mean[i], stats.std[i]);
            out.map_column(k, f, |v| (v - m) / s);
        }
    }
    Ok(out)
}
