//! Forward pass: per-node encoding, state fusion, graph propagation, gated
//! fusion, dynamic adjustment and shared-exclusive decoding.
//!
//! Hidden quantities are `K x d` matrices with one row per node. The per-node
//! gates (α, λ, γ) are scalars, one per row.

use std::collections::VecDeque;

use super::params::slot;
use super::{ModelConfig, ModelParams, FLUCTUATION_DECAY};
use crate::data::WindowBatch;
use crate::error::{Error, Result};
use crate::numkit::{dot, gemm_nn, sigmoid, sigmoid_scalar, tanh, Matrix};
use crate::structure::AdjacencyMatrix;

/// Recurrent state carried between steps of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenState {
    /// Previous fused state, `K x d`.
    pub fused: Matrix,
    /// Most recent adjusted hidden matrices, newest first, at most m of them.
    pub g_buffer: VecDeque<Matrix>,
    /// Previous raw input, `K x F`.
    pub prev_input: Matrix,
    /// Fluctuation intensity per node.
    pub s_ewma: Vec<f64>,
}

impl HiddenState {
    pub fn zeros(config: &ModelConfig) -> Self {
        HiddenState {
            fused: Matrix::zeros(config.nodes, config.hidden),
            g_buffer: VecDeque::with_capacity(config.context),
            prev_input: Matrix::zeros(config.nodes, config.features),
            s_ewma: vec![0.0; config.nodes],
        }
    }
}

/// Intermediates of one decode call.
#[derive(Debug, Clone)]
pub struct DecodeCache {
    /// `K x (m·d)`; row k is node k's recent adjusted states, newest first.
    pub context: Matrix,
    /// Trunk pre-activation, `K x d_dec`.
    pub trunk_pre: Matrix,
    /// Trunk output after ReLU.
    pub trunk: Matrix,
    pub predictions: Vec<f64>,
}

/// Intermediates of one step.
#[derive(Debug, Clone)]
pub struct StepCache {
    pub input: Matrix,
    pub encoded: Matrix,
    pub fused_prev: Matrix,
    pub alpha: Vec<f64>,
    pub fused: Matrix,
    /// `A · H̃` (or `H̃` when the graph is ablated).
    pub mixed: Matrix,
    pub propagated: Matrix,
    pub fluctuation: Vec<f64>,
    pub lambda: Vec<f64>,
    pub gated: Matrix,
    pub s: Vec<f64>,
    pub gamma: Vec<f64>,
    pub adjusted: Matrix,
    pub decode: Option<DecodeCache>,
}

/// One [`StepCache`] per processed step.
#[derive(Debug, Clone, Default)]
pub struct ForwardTrace {
    pub steps: Vec<StepCache>,
}

fn finite_or(m: &Matrix, op: &str) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(Error::numeric(op))
    }
}

fn scale_rows(m: &Matrix, s: &[f64]) -> Matrix {
    let mut out = m.clone();
    for (k, &g) in s.iter().enumerate() {
        out.row_mut(k).iter_mut().for_each(|v| *v *= g);
    }
    out
}

/// Shared encoder: `tanh(x W_e + b_e)` applied to every node row.
pub fn encode(x: &Matrix, params: &ModelParams) -> Result<Matrix> {
    if !x.is_finite() {
        return Err(Error::numeric("encode input"));
    }
    let pre = x.matmul(params.get(slot::W_E))?.add_row(params.get(slot::B_E))?;
    Ok(tanh(&pre))
}

/// Per-node convex blend of the new encoding and the previous fused state,
/// gated by `α = σ(w_α · [h ‖ h̃_prev] + b_α)`.
pub fn fuse_state(
    encoded: &Matrix,
    state: &HiddenState,
    params: &ModelParams,
    use_fusion: bool,
) -> Result<(Matrix, Vec<f64>)> {
    let k = encoded.rows();
    if !use_fusion {
        return Ok((encoded.clone(), vec![1.0; k]));
    }
    let prev = &state.fused;
    if prev.shape() != encoded.shape() {
        return Err(Error::Shape("fused state does not match encoding".into()));
    }
    let d = encoded.cols();
    let w = params.get(slot::W_ALPHA).data();
    let b = params.scalar_at(slot::B_ALPHA);
    let mut fused = Matrix::zeros(k, d);
    let mut alpha = Vec::with_capacity(k);
    for node in 0..k {
        let h = encoded.row(node);
        let p = prev.row(node);
        let a = sigmoid_scalar(dot(&w[..d], h) + dot(&w[d..], p) + b);
        for (o, (hv, pv)) in fused.row_mut(node).iter_mut().zip(h.iter().zip(p)) {
            *o = a * hv + (1.0 - a) * pv;
        }
        alpha.push(a);
    }
    finite_or(&fused, "fuse_state")?;
    Ok((fused, alpha))
}

fn mix(fused: &Matrix, adjacency: &AdjacencyMatrix, use_graph: bool) -> Result<Matrix> {
    if !use_graph {
        return Ok(fused.clone());
    }
    if adjacency.k() != fused.rows() {
        return Err(Error::Shape(format!(
            "adjacency is {}x{} for {} nodes",
            adjacency.k(),
            adjacency.k(),
            fused.rows()
        )));
    }
    adjacency.matrix().matmul(fused)
}

/// Graph propagation `σ(A · H̃ · W_s)`; with the graph ablated A is the identity.
pub fn propagate(
    fused: &Matrix,
    adjacency: &AdjacencyMatrix,
    params: &ModelParams,
    use_graph: bool,
) -> Result<Matrix> {
    let mixed = mix(fused, adjacency, use_graph)?;
    Ok(sigmoid(&mixed.matmul(params.get(slot::W_S))?))
}

/// L2 norm of each node's input change since the previous step.
pub fn fluctuation(x: &Matrix, prev: &Matrix) -> Vec<f64> {
    (0..x.rows())
        .map(|k| {
            x.row(k)
                .iter()
                .zip(prev.row(k))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Fluctuation-gated convex blend `λ·Z + (1 − λ)·H̃` with
/// `λ = σ(w_λ ‖Δx‖ + b_λ)` per node.
pub fn gate_fuse(
    propagated: &Matrix,
    fused: &Matrix,
    x: &Matrix,
    state: &HiddenState,
    params: &ModelParams,
) -> Result<(Matrix, Vec<f64>)> {
    if propagated.shape() != fused.shape() {
        return Err(Error::Shape("gate_fuse operands differ in shape".into()));
    }
    let v = fluctuation(x, &state.prev_input);
    let (w, b) = (params.scalar_at(slot::W_LAMBDA), params.scalar_at(slot::B_LAMBDA));
    let lambda: Vec<f64> = v.iter().map(|&v| sigmoid_scalar(w * v + b)).collect();
    let mut gated = fused.clone();
    for (k, &l) in lambda.iter().enumerate() {
        for (g, z) in gated.row_mut(k).iter_mut().zip(propagated.row(k)) {
            *g = l * z + (1.0 - l) * *g;
        }
    }
    finite_or(&gated, "gate_fuse")?;
    Ok((gated, lambda))
}

/// Dynamic adjustment: EWMA fluctuation intensity `s`, per-node scale
/// `γ = σ(u·s + c)`, output `γ·G`. Returns the adjusted matrix, γ and the
/// updated intensities.
pub fn dynamic_adjust(
    gated: &Matrix,
    x: &Matrix,
    state: &HiddenState,
    params: &ModelParams,
    use_dynamic: bool,
) -> Result<(Matrix, Vec<f64>, Vec<f64>)> {
    let v = fluctuation(x, &state.prev_input);
    let s: Vec<f64> = state
        .s_ewma
        .iter()
        .zip(&v)
        .map(|(prev, v)| FLUCTUATION_DECAY * prev + (1.0 - FLUCTUATION_DECAY) * v)
        .collect();
    if !use_dynamic {
        return Ok((gated.clone(), vec![1.0; gated.rows()], s));
    }
    let (u, c) = (params.scalar_at(slot::U), params.scalar_at(slot::C));
    let gamma: Vec<f64> = s.iter().map(|&s| sigmoid_scalar(u * s + c)).collect();
    let adjusted = scale_rows(gated, &gamma);
    finite_or(&adjusted, "dynamic_adjust")?;
    Ok((adjusted, gamma, s))
}

/// Shared trunk `ReLU(c W_sh + b_sh)` over each node's context of recent
/// adjusted states, then one linear head per task. `buffer` is newest first;
/// missing entries are zero-padded.
pub fn decode(buffer: &VecDeque<Matrix>, params: &ModelParams) -> Result<DecodeCache> {
    let w_sh = params.get(slot::W_SH);
    let heads = params.get(slot::W_H);
    let k = heads.rows();
    let md = w_sh.rows();
    let Some(first) = buffer.front() else {
        return Err(Error::Shape("decode needs at least one hidden matrix".into()));
    };
    let d = first.cols();
    if d == 0 || !md.is_multiple_of(d) || buffer.len() > md / d {
        return Err(Error::Shape(format!(
            "decoder expects {md} context columns, buffer holds {} of width {d}",
            buffer.len()
        )));
    }
    let mut context = Matrix::zeros(k, md);
    for (j, g) in buffer.iter().enumerate() {
        if g.shape() != (k, d) {
            return Err(Error::Shape("hidden buffer entries differ in shape".into()));
        }
        for node in 0..k {
            context.row_mut(node)[j * d..(j + 1) * d].copy_from_slice(g.row(node));
        }
    }
    let mut trunk_pre = Matrix::zeros(k, w_sh.cols());
    gemm_nn(&context, w_sh, &mut trunk_pre);
    let trunk_pre = trunk_pre.add_row(params.get(slot::B_SH))?;
    let trunk = trunk_pre.map(|v| v.max(0.0));
    let bias = params.get(slot::B_H).data();
    let predictions: Vec<f64> = (0..k)
        .map(|node| dot(heads.row(node), trunk.row(node)) + bias[node])
        .collect();
    if predictions.iter().any(|p| !p.is_finite()) {
        return Err(Error::numeric("decode"));
    }
    Ok(DecodeCache {
        context,
        trunk_pre,
        trunk,
        predictions,
    })
}

/// Advance the state by one input step and return its cache. Decodes when
/// `emit` is set.
pub fn step(
    x: &Matrix,
    state: &mut HiddenState,
    adjacency: &AdjacencyMatrix,
    params: &ModelParams,
    config: &ModelConfig,
    emit: bool,
) -> Result<StepCache> {
    if x.shape() != (config.nodes, config.features) {
        return Err(Error::Shape(format!(
            "input {:?}, expected {}x{}",
            x.shape(),
            config.nodes,
            config.features
        )));
    }
    let encoded = encode(x, params)?;
    let (fused, alpha) = fuse_state(&encoded, state, params, config.use_fusion)?;
    let mixed = mix(&fused, adjacency, config.use_graph)?;
    let propagated = sigmoid(&mixed.matmul(params.get(slot::W_S))?);
    let (gated, lambda) = gate_fuse(&propagated, &fused, x, state, params)?;
    let (adjusted, gamma, s) = dynamic_adjust(&gated, x, state, params, config.use_dynamic)?;
    let fluct = fluctuation(x, &state.prev_input);

    let fused_prev = std::mem::replace(&mut state.fused, fused.clone());
    state.prev_input = x.clone();
    state.s_ewma = s.clone();
    state.g_buffer.push_front(adjusted.clone());
    state.g_buffer.truncate(config.context);

    let decode = if emit {
        Some(decode(&state.g_buffer, params)?)
    } else {
        None
    };
    Ok(StepCache {
        input: x.clone(),
        encoded,
        fused_prev,
        alpha,
        fused,
        mixed,
        propagated,
        fluctuation: fluct,
        lambda,
        gated,
        s,
        gamma,
        adjusted,
        decode,
    })
}

/// Run a sequence of inputs from a zeroed state. Predictions are emitted at
/// every step t >= m (1-based), so the result holds `len - m + 1` rows.
pub fn forward_inputs(
    inputs: &[Matrix],
    adjacency: &AdjacencyMatrix,
    params: &ModelParams,
    config: &ModelConfig,
) -> Result<(Vec<Vec<f64>>, ForwardTrace)> {
    let mut state = HiddenState::zeros(config);
    let mut trace = ForwardTrace {
        steps: Vec::with_capacity(inputs.len()),
    };
    let mut predictions = Vec::with_capacity(inputs.len().saturating_sub(config.context) + 1);
    for (i, x) in inputs.iter().enumerate() {
        let cache = step(x, &mut state, adjacency, params, config, i + 1 >= config.context)?;
        if let Some(dec) = &cache.decode {
            predictions.push(dec.predictions.clone());
        }
        trace.steps.push(cache);
    }
    Ok((predictions, trace))
}

/// Forward pass over one window.
pub fn forward_window(
    window: &WindowBatch,
    adjacency: &AdjacencyMatrix,
    params: &ModelParams,
    config: &ModelConfig,
) -> Result<(Vec<Vec<f64>>, ForwardTrace)> {
    if window.inputs.len() != config.window {
        return Err(Error::Shape(format!(
            "window has {} steps, config expects {}",
            window.inputs.len(),
            config.window
        )));
    }
    forward_inputs(&window.inputs, adjacency, params, config)
}
