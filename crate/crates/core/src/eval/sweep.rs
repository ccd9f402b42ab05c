//! Seeded grids of independent training runs.
//!
//! Every cell derives its own seed from the master seed and its coordinates,
//! so the table is the same whether cells run serially or in parallel.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::evaluate::{evaluate, persistence_windows, Scale};
use super::mlp::MlpBaseline;
use super::pipeline::Prepared;
use super::report::{MetricsReport, METRICS_CSV_HEADER};
use crate::data::{window, WindowBatch};
use crate::error::{Error, Result};
use crate::model::{train, ModelConfig, TrainConfig};
use crate::numkit::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    Hidden,
    Horizon,
    Ablation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Full,
    NoGraph,
    NoFusion,
    NoDynamic,
    Mlp,
    Persistence,
}

impl Variant {
    pub const ABLATIONS: [Variant; 4] = [Variant::Full, Variant::NoGraph, Variant::NoFusion, Variant::NoDynamic];
    pub const ALL: [Variant; 6] = [
        Variant::Full,
        Variant::NoGraph,
        Variant::NoFusion,
        Variant::NoDynamic,
        Variant::Mlp,
        Variant::Persistence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoGraph => "no_graph",
            Variant::NoFusion => "no_fusion",
            Variant::NoDynamic => "no_dynamic",
            Variant::Mlp => "mlp",
            Variant::Persistence => "persistence",
        }
    }
}

/// Shared inputs of every cell.
#[derive(Debug, Clone, Copy)]
pub struct SweepSpec<'a> {
    pub data: &'a Prepared,
    pub base: &'a ModelConfig,
    pub train: &'a TrainConfig,
    pub seeds: &'a [u64],
    pub master_seed: u64,
    pub config_hash: &'a str,
    /// Report metrics in raw units.
    pub denormalize: bool,
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub point: String,
    pub seed: u64,
    /// Seed the cell actually trained with.
    pub run_seed: u64,
    pub report: MetricsReport,
    /// Persistence on the same test samples, where swept alongside.
    #[serde(default)]
    pub persistence: Option<MetricsReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub kind: SweepKind,
    pub axis: String,
    pub master_seed: u64,
    pub config_hash: String,
    /// Resolved run configuration, when produced by a configured run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_config: Option<serde_json::Value>,
    pub rows: Vec<SweepRow>,
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

impl SweepTable {
    /// Grid points in table order.
    pub fn points(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.point) {
                out.push(r.point.clone());
            }
        }
        out
    }

    /// Median over seeds of an aggregate metric at one grid point.
    pub fn median(&self, point: &str, metric: impl Fn(&MetricsReport) -> f64) -> Option<f64> {
        let mut v: Vec<f64> = self.rows.iter().filter(|r| r.point == point).map(|r| metric(&r.report)).collect();
        median(&mut v)
    }

    /// Median over seeds of the persistence baseline's aggregate metric.
    pub fn persistence_median(&self, point: &str, metric: impl Fn(&MetricsReport) -> f64) -> Option<f64> {
        let mut v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.point == point)
            .filter_map(|r| r.persistence.as_ref().map(&metric))
            .collect();
        median(&mut v)
    }

    /// One row per task per cell, plus each cell's aggregate under task `all`.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},seed,model,{}\n", self.axis, METRICS_CSV_HEADER.replacen("label,", "", 1));
        for row in &self.rows {
            let mut cell = |r: &MetricsReport, model: &str| {
                let mut lines = String::new();
                r.csv_rows(&mut lines, "");
                for line in lines.lines() {
                    let _ = writeln!(out, "{},{},{model}{line}", row.point, row.seed);
                }
            };
            cell(&row.report, "model");
            if let Some(p) = &row.persistence {
                cell(p, "persistence");
            }
        }
        out
    }
}

struct Cell {
    point: String,
    seed: u64,
    run_seed: u64,
    config: ModelConfig,
    variant: Variant,
    with_persistence: bool,
}

fn windows(series: &crate::data::AlignedSeries, c: &ModelConfig) -> Result<Vec<WindowBatch>> {
    window(series, c.window, c.horizon, c.context)
}

fn run_cell(spec: &SweepSpec<'_>, cell: &Cell) -> Result<SweepRow> {
    let data = spec.data;
    let c = &cell.config;
    let tasks = data.task_names();
    let feature = data.train.target_feature;
    let scale = if spec.denormalize {
        Scale::Raw {
            stats: &data.stats,
            feature,
        }
    } else {
        Scale::Normalized
    };
    let test = windows(&data.test, c)?;
    if test.is_empty() {
        return Err(Error::Data(format!("test split too short for L={} tau={}", c.window, c.horizon)));
    }
    let clock = std::time::Instant::now();
    let mut report = match cell.variant {
        Variant::Persistence => persistence_windows(&test, feature, scale).report("persistence", &tasks, spec.denormalize)?,
        Variant::Mlp => {
            let train_w = windows(&data.train, c)?;
            let mlp = MlpBaseline::fit(&train_w, c.hidden, spec.train, cell.run_seed)?;
            mlp.predict_windows(&test, scale)?.report("mlp", &tasks, spec.denormalize)?
        }
        _ => {
            let train_w = windows(&data.train, c)?;
            let val_w = windows(&data.val, c)?;
            let (params, _) = train(&train_w, &val_w, &data.adjacency, c, spec.train)?;
            let (mut r, _) = evaluate(&params, c, &data.adjacency, &test, &tasks, scale)?;
            r.label = cell.variant.name().into();
            r
        }
    };
    report.seed = cell.run_seed;
    report.config_hash = spec.config_hash.to_string();
    report.wall_clock = clock.elapsed();
    let persistence = if cell.with_persistence {
        let mut p = persistence_windows(&test, feature, scale).report("persistence", &tasks, spec.denormalize)?;
        p.config_hash = spec.config_hash.to_string();
        Some(p)
    } else {
        None
    };
    Ok(SweepRow {
        point: cell.point.clone(),
        seed: cell.seed,
        run_seed: cell.run_seed,
        report,
        persistence,
    })
}

fn run(spec: &SweepSpec<'_>, kind: SweepKind, axis: &str, cells: Vec<Cell>) -> Result<SweepTable> {
    if spec.seeds.is_empty() {
        return Err(Error::Config("sweep needs at least one seed".into()));
    }
    let rows: Vec<SweepRow> = if spec.parallel {
        cells.par_iter().map(|c| run_cell(spec, c)).collect::<Result<_>>()?
    } else {
        cells.iter().map(|c| run_cell(spec, c)).collect::<Result<_>>()?
    };
    Ok(SweepTable {
        kind,
        axis: axis.into(),
        master_seed: spec.master_seed,
        config_hash: spec.config_hash.to_string(),
        run_config: None,
        rows,
    })
}

fn sorted_grid(grid: &[usize], what: &str) -> Result<Vec<usize>> {
    let mut g = grid.to_vec();
    g.sort_unstable();
    g.dedup();
    if g.is_empty() || g.len() != grid.len() || g[0] == 0 {
        return Err(Error::Config(format!("{what} grid must be non-empty, positive and distinct")));
    }
    Ok(g)
}

/// One model per `(hidden width, seed)`, rows sorted by width then seed.
pub fn sweep_hidden(spec: &SweepSpec<'_>, dims: &[usize]) -> Result<SweepTable> {
    let mut cells = Vec::new();
    for d in sorted_grid(dims, "hidden")? {
        for &seed in spec.seeds {
            let run_seed = derive_seed(spec.master_seed, &[1, d as u64, seed]);
            let mut config = spec.base.clone();
            config.hidden = d;
            config.seed = run_seed;
            cells.push(Cell {
                point: d.to_string(),
                seed,
                run_seed,
                config: config.validate()?,
                variant: Variant::Full,
                with_persistence: false,
            });
        }
    }
    run(spec, SweepKind::Hidden, "hidden", cells)
}

/// One model per `(horizon, seed)`, with persistence scored on the same
/// test samples.
pub fn sweep_horizon(spec: &SweepSpec<'_>, taus: &[usize]) -> Result<SweepTable> {
    let mut cells = Vec::new();
    for tau in sorted_grid(taus, "horizon")? {
        for &seed in spec.seeds {
            let run_seed = derive_seed(spec.master_seed, &[2, tau as u64, seed]);
            let mut config = spec.base.clone();
            config.horizon = tau;
            config.seed = run_seed;
            cells.push(Cell {
                point: tau.to_string(),
                seed,
                run_seed,
                config: config.validate()?,
                variant: Variant::Full,
                with_persistence: true,
            });
        }
    }
    run(spec, SweepKind::Horizon, "horizon", cells)
}

/// Model variants trained with shared seeds: every variant of seed `s` starts
/// from the same derived seed.
pub fn ablation_suite(spec: &SweepSpec<'_>, variants: &[Variant]) -> Result<SweepTable> {
    if variants.is_empty() {
        return Err(Error::Config("ablation needs at least one variant".into()));
    }
    let mut cells = Vec::new();
    for &v in variants {
        for &seed in spec.seeds {
            let run_seed = derive_seed(spec.master_seed, &[3, seed]);
            let mut config = spec.base.clone();
            config.seed = run_seed;
            match v {
                Variant::NoGraph => config.use_graph = false,
                Variant::NoFusion => config.use_fusion = false,
                Variant::NoDynamic => config.use_dynamic = false,
                _ => {}
            }
            cells.push(Cell {
                point: v.name().into(),
                seed,
                run_seed,
                config: config.validate()?,
                variant: v,
                with_persistence: false,
            });
        }
    }
    run(spec, SweepKind::Ablation, "variant", cells)
}
