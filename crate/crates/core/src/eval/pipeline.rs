use serde::{Deserialize, Serialize};

use crate::data::{clip_outliers, normalize, split, AlignedSeries, NormStats};
use crate::error::{Error, Result};
use crate::structure::{
    adjacency_from_correlation, adjacency_from_topology, AdjacencyMatrix, TopologySpec,
    DEFAULT_THRESHOLD,
};

/// Where the inter-task adjacency comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum AdjacencySource {
    Topology(TopologySpec),
    /// Thresholded absolute target correlations on the training split.
    Correlation { threshold: f64 },
    Identity,
}

impl Default for AdjacencySource {
    fn default() -> Self {
        AdjacencySource::Correlation {
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrepareOptions {
    /// Winsorization quantiles; `None` disables clipping.
    #[serde(default = "d_clip")]
    pub clip: Option<[f64; 2]>,
    #[serde(default = "d_split")]
    pub split: [f64; 3],
}

fn d_clip() -> Option<[f64; 2]> {
    Some([crate::data::DEFAULT_P_LOW, crate::data::DEFAULT_P_HIGH])
}
fn d_split() -> [f64; 3] {
    [0.7, 0.1, 0.2]
}

impl Default for PrepareOptions {
    fn default() -> Self {
        PrepareOptions {
            clip: d_clip(),
            split: d_split(),
        }
    }
}

/// Cleaned, split and normalized data plus the adjacency built from it.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: AlignedSeries,
    pub val: AlignedSeries,
    pub test: AlignedSeries,
    /// Step of the full series where each split begins.
    pub offsets: [usize; 3],
    pub stats: NormStats,
    pub adjacency: AdjacencyMatrix,
    pub warnings: Vec<String>,
}

impl Prepared {
    pub fn task_names(&self) -> Vec<String> {
        self.train.node_ids.clone()
    }
}

/// Clip, split chronologically (each part at least `min_len` steps), fit
/// normalization on the training part, normalize all parts and build the
/// adjacency.
pub fn prepare(
    series: &AlignedSeries,
    options: &PrepareOptions,
    min_len: usize,
    source: &AdjacencySource,
) -> Result<Prepared> {
    let cleaned = match options.clip {
        Some([lo, hi]) => clip_outliers(series, lo, hi)?,
        None => series.clone(),
    };
    let (train, val, test) = split(&cleaned, options.split, min_len)?;
    let offsets = [0, train.steps(), train.steps() + val.steps()];
    let stats = NormStats::fit(&train)?;
    let train = normalize(&train, &stats)?;
    let val = normalize(&val, &stats)?;
    let test = normalize(&test, &stats)?;
    let mut warnings = Vec::new();
    let adjacency = match source {
        AdjacencySource::Identity => AdjacencyMatrix::identity(series.nodes()),
        AdjacencySource::Topology(spec) => topology_in_series_order(spec, series)?,
        AdjacencySource::Correlation { threshold } => {
            let c = adjacency_from_correlation(&train, train.target_feature, *threshold)?;
            warnings = c.warnings;
            c.adjacency
        }
    };
    Ok(Prepared {
        train,
        val,
        test,
        offsets,
        stats,
        adjacency,
        warnings,
    })
}

/// Build the topology adjacency with rows ordered like the series' nodes.
pub fn topology_in_series_order(spec: &TopologySpec, series: &AlignedSeries) -> Result<AdjacencyMatrix> {
    let mut spec_nodes = spec.nodes.clone();
    spec_nodes.sort();
    let mut series_nodes = series.node_ids.clone();
    series_nodes.sort();
    if spec_nodes != series_nodes {
        return Err(Error::Data("topology nodes do not match series nodes".into()));
    }
    adjacency_from_topology(&TopologySpec {
        nodes: series.node_ids.clone(),
        edges: spec.edges.clone(),
    })
}
