//! Coupled VAR(1)-over-graph telemetry with bursts and topology drift.

use serde::{Deserialize, Serialize};

use super::AlignedSeries;
use crate::error::{Error, Result};
use crate::numkit::{rng::streams, Matrix, RandomSource};
use crate::structure::{row_normalize, AdjacencyMatrix, TopologyEdge, TopologySpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub nodes: usize,
    pub features: usize,
    pub steps: usize,
    /// ρ in `[0, 1)`.
    #[serde(default = "d_coupling")]
    pub coupling: f64,
    /// Probability of each directed off-diagonal edge.
    #[serde(default = "d_density")]
    pub density: f64,
    #[serde(default = "d_noise")]
    pub noise: f64,
    /// Expected bursts per node per 1000 steps.
    #[serde(default = "d_burst_rate")]
    pub burst_rate: f64,
    #[serde(default = "d_burst_magnitude")]
    pub burst_magnitude: f64,
    /// Per-step geometric decay factor of a burst, in `[0, 1)`.
    #[serde(default = "d_burst_decay")]
    pub burst_decay: f64,
    #[serde(default)]
    pub drift_times: Vec<usize>,
    /// Share of edges rewired at each drift time.
    #[serde(default = "d_drift_fraction")]
    pub drift_fraction: f64,
    /// Amplitude of a periodic forcing term; 0 disables it.
    #[serde(default)]
    pub season_amplitude: f64,
    #[serde(default = "d_period")]
    pub season_period: f64,
    #[serde(default = "d_bucket")]
    pub bucket_seconds: i64,
    #[serde(default)]
    pub seed: u64,
}

fn d_coupling() -> f64 {
    0.6
}
fn d_density() -> f64 {
    0.3
}
fn d_noise() -> f64 {
    0.3
}
fn d_burst_rate() -> f64 {
    5.0
}
fn d_burst_magnitude() -> f64 {
    3.0
}
fn d_burst_decay() -> f64 {
    0.7
}
fn d_drift_fraction() -> f64 {
    0.2
}
fn d_period() -> f64 {
    24.0
}
fn d_bucket() -> i64 {
    60
}

impl SynthConfig {
    /// The default burst scenario for `nodes x features x steps`.
    pub fn new(nodes: usize, features: usize, steps: usize) -> Self {
        SynthConfig {
            nodes,
            features,
            steps,
            coupling: d_coupling(),
            density: d_density(),
            noise: d_noise(),
            burst_rate: d_burst_rate(),
            burst_magnitude: d_burst_magnitude(),
            burst_decay: d_burst_decay(),
            drift_times: Vec::new(),
            drift_fraction: d_drift_fraction(),
            season_amplitude: 0.0,
            season_period: d_period(),
            bucket_seconds: d_bucket(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.nodes == 0 || self.features == 0 || self.steps == 0 {
            return bad("nodes, features and steps must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.density) || !(0.0..=1.0).contains(&self.drift_fraction) {
            return bad("density and drift_fraction must lie in [0, 1]".into());
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise {} must be finite and >= 0", self.noise));
        }
        if !(self.burst_rate >= 0.0 && self.burst_rate <= 1000.0) {
            return bad(format!("burst_rate {} outside [0, 1000]", self.burst_rate));
        }
        if !self.burst_magnitude.is_finite() || !(0.0..1.0).contains(&self.burst_decay) {
            return bad("burst magnitude must be finite and decay in [0, 1)".into());
        }
        if !self.season_amplitude.is_finite() || !(self.season_period > 0.0) {
            return bad("season amplitude must be finite and period positive".into());
        }
        if self.bucket_seconds <= 0 {
            return bad("bucket_seconds must be positive".into());
        }
        if !(0.0..1.0).contains(&self.coupling) {
            return bad(format!(
                "coupling {} gives spectral radius >= 1; need 0 <= coupling < 1",
                self.coupling
            ));
        }
        Ok(())
    }
}

/// Generated series plus the ground truth behind it.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub series: AlignedSeries,
    /// Row-normalized pre-drift graph.
    pub adjacency: AdjacencyMatrix,
    /// Binary off-diagonal edges of the pre-drift graph.
    pub topology: TopologySpec,
    /// Long-run level μ, `K x F` row-major.
    pub levels: Vec<f64>,
}

fn node_id(i: usize) -> String {
    format!("node-{i:02}")
}

/// Spectral radius bound of `ρ Â` through the infinity norm.
fn check_stability(coupling: f64, a: &Matrix) -> Result<()> {
    let norm = (0..a.rows())
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if coupling * norm >= 1.0 {
        return Err(Error::Config(format!(
            "transition matrix is not stable: coupling x row-norm = {}",
            coupling * norm
        )));
    }
    Ok(())
}

fn normalized(edges: &[Vec<bool>]) -> Result<AdjacencyMatrix> {
    let k = edges.len();
    let mut raw = Matrix::identity(k);
    for (i, row) in edges.iter().enumerate() {
        for (j, &e) in row.iter().enumerate() {
            if e {
                raw.set(i, j, 1.0);
            }
        }
    }
    row_normalize(&raw)
}

/// Move `round(fraction x edges)` existing edges to random empty slots.
fn drift(edges: &mut [Vec<bool>], fraction: f64, rng: &mut RandomSource) {
    let k = edges.len();
    let mut present = Vec::new();
    let mut absent = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if i != j {
                if edges[i][j] {
                    present.push((i, j));
                } else {
                    absent.push((i, j));
                }
            }
        }
    }
    let n = ((fraction * present.len() as f64).round() as usize).min(absent.len());
    rng.shuffle(&mut present);
    rng.shuffle(&mut absent);
    for &(i, j) in &present[..n] {
        edges[i][j] = false;
    }
    for &(i, j) in &absent[..n] {
        edges[i][j] = true;
    }
}

/// Periodic forcing of node `i`, feature `j` at step `t`.
pub fn season(cfg: &SynthConfig, t: usize, i: usize, j: usize) -> f64 {
    if cfg.season_amplitude == 0.0 {
        return 0.0;
    }
    let tau = std::f64::consts::TAU;
    let phase = tau * i as f64 / cfg.nodes as f64 + 0.5 * j as f64;
    cfg.season_amplitude * (tau * t as f64 / cfg.season_period + phase).sin()
}

/// `x_t = ρ Â x_{t-1} + (1 - ρ) μ + s_t + burst_t + ε_t` for every feature,
/// starting from `x_0 = μ`, where `s_t` is the optional periodic forcing.
/// Bursts hit a node with probability `rate / 1000` per step, add
/// `magnitude` to all of its features and decay geometrically.
pub fn synth_generate(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let (k, f, t_len) = (cfg.nodes, cfg.features, cfg.steps);
    let mut graph_rng = RandomSource::with_stream(cfg.seed, streams::SYNTH_GRAPH);
    let mut edges = vec![vec![false; k]; k];
    for (i, row) in edges.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            *e = i != j && graph_rng.bernoulli(cfg.density);
        }
    }
    let truth = normalized(&edges)?;
    check_stability(cfg.coupling, truth.matrix())?;

    let mut level_rng = RandomSource::with_stream(cfg.seed, streams::SYNTH_LEVEL);
    let levels: Vec<f64> = (0..k * f).map(|_| level_rng.uniform(-1.0, 1.0)).collect();
    let mut noise_rng = RandomSource::with_stream(cfg.seed, streams::SYNTH_NOISE);
    let mut burst_rng = RandomSource::with_stream(cfg.seed, streams::SYNTH_BURST);
    let mut drift_rng = RandomSource::with_stream(cfg.seed, streams::SYNTH_DRIFT);

    let rho = cfg.coupling;
    let burst_p = cfg.burst_rate / 1000.0;
    let mut a = truth.clone();
    let mut values = Vec::with_capacity(t_len * k * f);
    values.extend_from_slice(&levels);
    let mut bursts = vec![0.0; k];
    for t in 1..t_len {
        if cfg.drift_times.contains(&t) {
            drift(&mut edges, cfg.drift_fraction, &mut drift_rng);
            a = normalized(&edges)?;
        }
        for b in bursts.iter_mut() {
            *b *= cfg.burst_decay;
            if burst_p > 0.0 && burst_rng.bernoulli(burst_p) {
                *b += cfg.burst_magnitude;
            }
        }
        let prev = (t - 1) * k * f;
        for i in 0..k {
            let row = a.matrix().row(i);
            for j in 0..f {
                let mut mix = 0.0;
                for (n, w) in row.iter().enumerate() {
                    mix += w * values[prev + n * f + j];
                }
                let eps = if cfg.noise > 0.0 { cfg.noise * noise_rng.normal() } else { 0.0 };
                let forcing = season(cfg, t, i, j);
                values.push(rho * mix + (1.0 - rho) * levels[i * f + j] + forcing + bursts[i] + eps);
            }
        }
    }
    let node_ids: Vec<String> = (0..k).map(node_id).collect();
    let series = AlignedSeries::new(
        0,
        cfg.bucket_seconds,
        node_ids.clone(),
        (0..f).map(|j| format!("f{j}")).collect(),
        0,
        values,
        vec![true; t_len * k],
    )?;
    let topology = TopologySpec {
        nodes: node_ids,
        edges: truth_edges(&truth),
    };
    Ok(SynthOutput {
        series,
        adjacency: truth,
        topology,
        levels,
    })
}

fn truth_edges(a: &AdjacencyMatrix) -> Vec<TopologyEdge> {
    let k = a.k();
    let mut out = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if i != j && a.matrix().get(i, j) > 0.0 {
                out.push(TopologyEdge {
                    src: node_id(i),
                    dst: node_id(j),
                    weight: None,
                });
            }
        }
    }
    out
}
