use crate::error::{Error, Result};

/// Weighted squared error averaged over valid `(step, task)` pairs:
/// `(1/N) Σ_t Σ_k w_k (ŷ − y)²`.
pub fn loss(
    predictions: &[Vec<f64>],
    targets: &[Vec<f64>],
    mask: &[Vec<bool>],
    weights: &[f64],
) -> Result<f64> {
    let (sum, n) = weighted_sse(predictions, targets, mask, weights)?;
    if n == 0 {
        return Err(Error::Data("loss over zero valid targets".into()));
    }
    Ok(sum / n as f64)
}

/// Weighted sum of squared errors and the number of valid pairs.
pub(crate) fn weighted_sse(
    predictions: &[Vec<f64>],
    targets: &[Vec<f64>],
    mask: &[Vec<bool>],
    weights: &[f64],
) -> Result<(f64, usize)> {
    if predictions.len() != targets.len() || targets.len() != mask.len() {
        return Err(Error::Shape(format!(
            "{} prediction rows, {} target rows, {} mask rows",
            predictions.len(),
            targets.len(),
            mask.len()
        )));
    }
    let mut sum = 0.0;
    let mut n = 0;
    for ((p, y), m) in predictions.iter().zip(targets).zip(mask) {
        if p.len() != weights.len() || y.len() != weights.len() || m.len() != weights.len() {
            return Err(Error::Shape("row width does not match task count".into()));
        }
        for k in 0..weights.len() {
            if m[k] {
                let e = p[k] - y[k];
                sum += weights[k] * e * e;
                n += 1;
            }
        }
    }
    Ok((sum, n))
}
