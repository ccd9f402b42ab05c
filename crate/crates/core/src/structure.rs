//! Inter-task adjacency: built from an explicit topology or from the
//! correlation of each node's target feature, always with self-loops and
//! always row-stochastic.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::AlignedSeries;
use crate::error::{Error, Result};
use crate::numkit::Matrix;

/// Default correlation threshold.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Slack on the threshold comparison so that exactly collinear series, whose
/// computed correlation can land one ulp under 1, still pass `threshold = 1`.
const THRESHOLD_GUARD: f64 = 1e-12;

const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// `K x K` nonnegative row-stochastic matrix with a positive diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Matrix", into = "Matrix")]
pub struct AdjacencyMatrix {
    weights: Matrix,
}

impl AdjacencyMatrix {
    pub fn identity(k: usize) -> Self {
        AdjacencyMatrix {
            weights: Matrix::identity(k),
        }
    }

    /// Validate an already-normalized matrix.
    pub fn from_normalized(weights: Matrix) -> Result<Self> {
        let (r, c) = weights.shape();
        if r != c || r == 0 {
            return Err(Error::Shape(format!("adjacency must be square, got {r}x{c}")));
        }
        for i in 0..r {
            let row = weights.row(i);
            if row.iter().any(|&w| !(0.0..=1.0).contains(&w)) {
                return Err(Error::Data(format!("adjacency row {i} has entries outside [0, 1]")));
            }
            if row[i] <= 0.0 {
                return Err(Error::Data(format!("adjacency row {i} has no self-loop")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::Data(format!("adjacency row {i} sums to {sum}")));
            }
        }
        Ok(AdjacencyMatrix { weights })
    }

    pub fn k(&self) -> usize {
        self.weights.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.weights
    }

    pub fn is_identity(&self) -> bool {
        self.weights == Matrix::identity(self.k())
    }

    /// Relabel nodes: new node `i` is old node `perm[i]` (`P A Pᵀ`).
    pub fn permuted(&self, perm: &[usize]) -> AdjacencyMatrix {
        let k = self.k();
        let mut out = Matrix::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                out.set(i, j, self.weights.get(perm[i], perm[j]));
            }
        }
        AdjacencyMatrix { weights: out }
    }
}

impl TryFrom<Matrix> for AdjacencyMatrix {
    type Error = Error;

    fn try_from(m: Matrix) -> Result<Self> {
        AdjacencyMatrix::from_normalized(m)
    }
}

impl From<AdjacencyMatrix> for Matrix {
    fn from(a: AdjacencyMatrix) -> Matrix {
        a.weights
    }
}

/// Divide each row by its sum.
pub fn row_normalize(raw: &Matrix) -> Result<AdjacencyMatrix> {
    let (r, c) = raw.shape();
    if r != c || r == 0 {
        return Err(Error::Shape(format!("adjacency must be square, got {r}x{c}")));
    }
    let mut out = raw.clone();
    for i in 0..r {
        let row = out.row_mut(i);
        if let Some(w) = row.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Data(format!("adjacency row {i} has invalid weight {w}")));
        }
        if row[i] <= 0.0 {
            return Err(Error::Data(format!("adjacency row {i} has no self-loop")));
        }
        let sum: f64 = row.iter().sum();
        row.iter_mut().for_each(|w| *w /= sum);
    }
    Ok(AdjacencyMatrix { weights: out })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyEdge {
    pub src: String,
    pub dst: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

/// Node ids plus a directed, optionally weighted edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    pub nodes: Vec<String>,
    #[serde(default)]
    pub edges: Vec<TopologyEdge>,
}

impl TopologySpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))
    }

    fn index(&self) -> Result<HashMap<&str, usize>> {
        let mut index = HashMap::with_capacity(self.nodes.len());
        for (i, id) in self.nodes.iter().enumerate() {
            if index.insert(id.as_str(), i).is_some() {
                return Err(Error::Data(format!("duplicate node id {id:?}")));
            }
        }
        Ok(index)
    }
}

/// Binary or weighted adjacency from a topology, unit self-loops added,
/// then row-normalized. Edge `src -> dst` lands in row `src`.
pub fn adjacency_from_topology(spec: &TopologySpec) -> Result<AdjacencyMatrix> {
    if spec.nodes.is_empty() {
        return Err(Error::Data("topology has no nodes".into()));
    }
    let index = spec.index()?;
    let k = spec.nodes.len();
    let mut raw = Matrix::identity(k);
    for e in &spec.edges {
        let lookup = |id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| Error::Data(format!("edge references unknown node {id:?}")))
        };
        let (s, d) = (lookup(&e.src)?, lookup(&e.dst)?);
        let w = e.weight.unwrap_or(1.0);
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::Data(format!("edge {}->{} has invalid weight {w}", e.src, e.dst)));
        }
        raw.set(s, d, raw.get(s, d) + w);
    }
    row_normalize(&raw)
}

/// Adjacency estimated from target-feature correlations.
#[derive(Debug, Clone)]
pub struct CorrelationAdjacency {
    pub adjacency: AdjacencyMatrix,
    /// Pre-normalization weights: `|ρ|` for kept edges, 1 on the diagonal.
    pub raw: Matrix,
    /// Pearson correlations; `NaN` where a node has zero variance.
    pub correlations: Matrix,
    pub warnings: Vec<String>,
}

/// Keep edge `(i, j)` with weight `|ρ_ij|` when `|ρ_ij| >= threshold`,
/// correlating the target feature over steps where every node is valid.
pub fn adjacency_from_correlation(
    series: &AlignedSeries,
    feature: usize,
    threshold: f64,
) -> Result<CorrelationAdjacency> {
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(Error::Config(format!("correlation threshold {threshold} must be >= 0")));
    }
    if feature >= series.features() {
        return Err(Error::Data(format!("feature {feature} out of range")));
    }
    let steps: Vec<usize> = (0..series.steps()).filter(|&t| series.step_valid(t)).collect();
    if steps.len() < 3 {
        return Err(Error::Data(format!(
            "correlation needs at least 3 jointly valid steps, found {}",
            steps.len()
        )));
    }
    let k = series.nodes();
    let n = steps.len() as f64;
    let centered: Vec<Vec<f64>> = (0..k)
        .map(|node| {
            let col: Vec<f64> = steps.iter().map(|&t| series.value(t, node, feature)).collect();
            let mean = col.iter().sum::<f64>() / n;
            col.into_iter().map(|v| v - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centered
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();

    let mut warnings = Vec::new();
    let degenerate: Vec<bool> = norms
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let flat = s <= f64::EPSILON * n.sqrt();
            if flat {
                warnings.push(format!(
                    "node {:?} has zero variance; keeping only its self-loop",
                    series.node_ids[i]
                ));
            }
            flat
        })
        .collect();

    let mut correlations = Matrix::filled(k, k, f64::NAN);
    let mut raw = Matrix::identity(k);
    for i in 0..k {
        if degenerate[i] {
            continue;
        }
        correlations.set(i, i, 1.0);
        for j in (i + 1)..k {
            if degenerate[j] {
                continue;
            }
            let cov: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            let rho = (cov / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            correlations.set(i, j, rho);
            correlations.set(j, i, rho);
            if rho.abs() >= threshold - THRESHOLD_GUARD {
                raw.set(i, j, rho.abs());
                raw.set(j, i, rho.abs());
            }
        }
    }
    Ok(CorrelationAdjacency {
        adjacency: row_normalize(&raw)?,
        raw,
        correlations,
        warnings,
    })
}
