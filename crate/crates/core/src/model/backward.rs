//! Hand-written reverse pass through time for the window loss.
//!
//! Gradients flow back through every step of the window: through the decoder
//! context into each adjusted hidden matrix, then step by step through the
//! dynamic gate, the fluctuation gate, graph propagation, state fusion (which
//! carries the adjoint of the fused state to the previous step) and the
//! shared encoder. The fluctuation intensities depend only on inputs and
//! carry no adjoint.

use super::forward::forward_window;
use super::loss::weighted_sse;
use super::params::slot;
use super::{ModelConfig, ModelParams};
use crate::data::WindowBatch;
use crate::error::{Error, Result};
use crate::numkit::{dot, gemm_tn_acc, Matrix, Objective, ParamSet};
use crate::structure::AdjacencyMatrix;

/// Loss of one window, its gradient and the window's predictions.
pub fn window_loss_grad(
    window: &WindowBatch,
    adjacency: &AdjacencyMatrix,
    params: &ModelParams,
    config: &ModelConfig,
) -> Result<(f64, ParamSet, Vec<Vec<f64>>)> {
    let (preds, trace) = forward_window(window, adjacency, params, config)?;
    let weights = &config.task_weights;
    let (sse, n) = weighted_sse(&preds, &window.targets, &window.target_mask, weights)?;
    if n == 0 {
        return Err(Error::Data("window has no valid targets".into()));
    }
    let inv_n = 1.0 / n as f64;

    let (k, d, m) = (config.nodes, config.hidden, config.context);
    let steps = trace.steps.len();
    let mut grads = params.set().zeros_like();
    let mut d_adjusted = vec![Matrix::zeros(k, d); steps];

    let w_h = params.get(slot::W_H);
    let w_sh = params.get(slot::W_SH);
    for (i, t) in (m - 1..steps).enumerate() {
        let dec = trace.steps[t].decode.as_ref().expect("decode cached at t >= m");
        let dd = dec.trunk.cols();
        let mut d_trunk_pre = Matrix::zeros(k, dd);
        for node in 0..k {
            if !window.target_mask[i][node] {
                continue;
            }
            let dy = 2.0 * weights[node] * (preds[i][node] - window.targets[i][node]) * inv_n;
            {
                let g = grads.get_mut(slot::W_H).row_mut(node);
                for (gv, r) in g.iter_mut().zip(dec.trunk.row(node)) {
                    *gv += dy * r;
                }
            }
            grads.get_mut(slot::B_H).data_mut()[node] += dy;
            let pre = dec.trunk_pre.row(node);
            for ((o, &w), &p) in d_trunk_pre.row_mut(node).iter_mut().zip(w_h.row(node)).zip(pre) {
                *o = if p > 0.0 { dy * w } else { 0.0 };
            }
        }
        gemm_tn_acc(&dec.context, &d_trunk_pre, grads.get_mut(slot::W_SH));
        grads.get_mut(slot::B_SH).add_assign(&d_trunk_pre.col_sums());
        let d_context = d_trunk_pre.matmul_t(w_sh)?;
        for j in 0..m.min(t + 1) {
            let target = &mut d_adjusted[t - j];
            for node in 0..k {
                let src = &d_context.row(node)[j * d..(j + 1) * d];
                for (o, v) in target.row_mut(node).iter_mut().zip(src) {
                    *o += v;
                }
            }
        }
    }

    let w_alpha = params.get(slot::W_ALPHA).data().to_vec();
    let w_s = params.get(slot::W_S);
    let mut carry = Matrix::zeros(k, d);
    for t in (0..steps).rev() {
        let c = &trace.steps[t];
        let mut dg = std::mem::replace(&mut d_adjusted[t], Matrix::zeros(0, 0));

        if config.use_dynamic {
            let (mut gu, mut gc) = (0.0, 0.0);
            for node in 0..k {
                let gamma = c.gamma[node];
                let dgamma = dot(dg.row(node), c.gated.row(node));
                let dpre = dgamma * gamma * (1.0 - gamma);
                gu += dpre * c.s[node];
                gc += dpre;
                dg.row_mut(node).iter_mut().for_each(|v| *v *= gamma);
            }
            grads.get_mut(slot::U).data_mut()[0] += gu;
            grads.get_mut(slot::C).data_mut()[0] += gc;
        }

        // Gated fusion: G = λ Z + (1 − λ) H̃.
        let mut d_prop = Matrix::zeros(k, d);
        let mut d_fused = carry;
        let (mut gwl, mut gbl) = (0.0, 0.0);
        for node in 0..k {
            let l = c.lambda[node];
            let z = c.propagated.row(node);
            let f = c.fused.row(node);
            let g = dg.row(node);
            let mut dl = 0.0;
            for j in 0..d {
                dl += g[j] * (z[j] - f[j]);
            }
            let dpre = dl * l * (1.0 - l);
            gwl += dpre * c.fluctuation[node];
            gbl += dpre;
            for (o, gv) in d_prop.row_mut(node).iter_mut().zip(g) {
                *o = l * gv;
            }
            for (o, gv) in d_fused.row_mut(node).iter_mut().zip(g) {
                *o += (1.0 - l) * gv;
            }
        }
        grads.get_mut(slot::W_LAMBDA).data_mut()[0] += gwl;
        grads.get_mut(slot::B_LAMBDA).data_mut()[0] += gbl;

        // Propagation: Z = σ(mixed · W_s), mixed = A · H̃.
        for (o, z) in d_prop.data_mut().iter_mut().zip(c.propagated.data()) {
            *o *= z * (1.0 - z);
        }
        gemm_tn_acc(&c.mixed, &d_prop, grads.get_mut(slot::W_S));
        let d_mixed = d_prop.matmul_t(w_s)?;
        if config.use_graph {
            d_fused.add_assign(&adjacency.matrix().t_matmul(&d_mixed)?);
        } else {
            d_fused.add_assign(&d_mixed);
        }

        // State fusion: H̃ = α H + (1 − α) H̃_prev.
        let d_encoded = if config.use_fusion {
            let mut d_h = Matrix::zeros(k, d);
            let mut d_prev = Matrix::zeros(k, d);
            let mut gb = 0.0;
            for node in 0..k {
                let a = c.alpha[node];
                let h = c.encoded.row(node);
                let p = c.fused_prev.row(node);
                let df = d_fused.row(node);
                let mut da = 0.0;
                for j in 0..d {
                    da += df[j] * (h[j] - p[j]);
                }
                let dpre = da * a * (1.0 - a);
                gb += dpre;
                {
                    let gw = grads.get_mut(slot::W_ALPHA).data_mut();
                    for j in 0..d {
                        gw[j] += dpre * h[j];
                        gw[d + j] += dpre * p[j];
                    }
                }
                let dh = d_h.row_mut(node);
                for j in 0..d {
                    dh[j] = a * df[j] + dpre * w_alpha[j];
                }
                let dp = d_prev.row_mut(node);
                for j in 0..d {
                    dp[j] = (1.0 - a) * df[j] + dpre * w_alpha[d + j];
                }
            }
            grads.get_mut(slot::B_ALPHA).data_mut()[0] += gb;
            carry = d_prev;
            d_h
        } else {
            carry = Matrix::zeros(k, d);
            d_fused
        };

        // Encoder: H = tanh(x W_e + b_e).
        let mut d_pre = d_encoded;
        for (o, h) in d_pre.data_mut().iter_mut().zip(c.encoded.data()) {
            *o *= 1.0 - h * h;
        }
        gemm_tn_acc(&c.input, &d_pre, grads.get_mut(slot::W_E));
        grads.get_mut(slot::B_E).add_assign(&d_pre.col_sums());
    }

    Ok((sse * inv_n, grads, preds))
}

/// Mean window loss over a set of windows.
pub fn mean_loss(
    windows: &[WindowBatch],
    adjacency: &AdjacencyMatrix,
    params: &ModelParams,
    config: &ModelConfig,
) -> Result<f64> {
    if windows.is_empty() {
        return Err(Error::Data("no windows".into()));
    }
    let mut total = 0.0;
    for w in windows {
        let (preds, _) = forward_window(w, adjacency, params, config)?;
        total += super::loss(&preds, &w.targets, &w.target_mask, &config.task_weights)?;
    }
    Ok(total / windows.len() as f64)
}

/// Mean window loss and its gradient.
pub fn mean_loss_grad(
    windows: &[WindowBatch],
    adjacency: &AdjacencyMatrix,
    params: &ModelParams,
    config: &ModelConfig,
) -> Result<(f64, ParamSet)> {
    if windows.is_empty() {
        return Err(Error::Data("no windows".into()));
    }
    let mut total = 0.0;
    let mut grads = params.set().zeros_like();
    for w in windows {
        let (l, g, _) = window_loss_grad(w, adjacency, params, config)?;
        total += l;
        grads.add_assign(&g);
    }
    let scale = 1.0 / windows.len() as f64;
    grads.scale_in_place(scale);
    Ok((total * scale, grads))
}

/// The training objective as an [`Objective`] over the raw parameter set.
pub struct TrainObjective<'a> {
    pub windows: &'a [WindowBatch],
    pub adjacency: &'a AdjacencyMatrix,
    pub config: &'a ModelConfig,
}

impl Objective for TrainObjective<'_> {
    fn value(&self, params: &ParamSet) -> Result<f64> {
        let p = ModelParams::from_set_unchecked(params.clone());
        mean_loss(self.windows, self.adjacency, &p, self.config)
    }

    fn value_and_grad(&self, params: &ParamSet) -> Result<(f64, ParamSet)> {
        let p = ModelParams::from_set_unchecked(params.clone());
        mean_loss_grad(self.windows, self.adjacency, &p, self.config)
    }
}
