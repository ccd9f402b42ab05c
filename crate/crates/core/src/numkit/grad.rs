use serde::Serialize;

use super::ParamSet;
use crate::error::{Error, Result};

/// A scalar-valued differentiable function of a [`ParamSet`].
pub trait Objective {
    fn value(&self, params: &ParamSet) -> Result<f64>;

    /// Value plus exact reverse-mode gradients, laid out like `params`.
    fn value_and_grad(&self, params: &ParamSet) -> Result<(f64, ParamSet)>;
}

/// Evaluate `f` and its gradient, failing on any non-finite value.
pub fn grad_eval<O: Objective + ?Sized>(f: &O, params: &ParamSet) -> Result<(f64, ParamSet)> {
    let (value, grads) = f.value_and_grad(params)?;
    if !value.is_finite() {
        return Err(Error::numeric("objective value"));
    }
    if let Some(name) = grads.first_non_finite() {
        return Err(Error::numeric(format!("gradient of {name}")));
    }
    Ok((value, grads))
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    /// Tensor name and entry index of the worst disagreement.
    pub worst: Option<(String, usize)>,
    pub epsilon: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Relative disagreement `|a - n| / (|a| + |n| + 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs() + 1e-8)
}

/// Compare analytic gradients of `f` against central differences on every
/// scalar parameter entry.
pub fn grad_check<O: Objective + ?Sized>(
    f: &O,
    params: &ParamSet,
    epsilon: f64,
    tolerance: f64,
) -> Result<CheckReport> {
    if !(epsilon > 0.0) || !(tolerance > 0.0) {
        return Err(Error::Config(
            "grad_check needs positive epsilon and tolerance".into(),
        ));
    }
    let (_, grads) = grad_eval(f, params)?;
    let mut probe = params.clone();
    let mut max_rel = 0.0;
    let mut worst = None;
    let n = params.num_scalars();
    for i in 0..n {
        let orig = params.scalar(i);
        probe.set_scalar(i, orig + epsilon);
        let plus = f.value(&probe)?;
        probe.set_scalar(i, orig - epsilon);
        let minus = f.value(&probe)?;
        probe.set_scalar(i, orig);
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::numeric("finite difference"));
        }
        let numeric = (plus - minus) / (2.0 * epsilon);
        let rel = relative_error(grads.scalar(i), numeric);
        if rel > max_rel || worst.is_none() {
            max_rel = rel;
            let (t, e) = params.locate(i).expect("index in range");
            worst = Some((params.name(t).to_string(), e));
        }
    }
    Ok(CheckReport {
        checked: n,
        max_rel_error: max_rel,
        worst,
        epsilon,
        tolerance,
        passed: max_rel < tolerance,
    })
}
