//! Metrics, baselines, evaluation and seeded sweeps.

mod evaluate;
pub mod metrics;
mod mlp;
mod pipeline;
mod report;
mod sweep;

pub use evaluate::{baseline_persistence, evaluate, persistence_windows, predict_windows, Scale};
pub use metrics::{mae, mape, mse, rmae, MetricSet, MAPE_EPSILON, RMAE_EPSILON};
pub use mlp::{MlpBaseline, MlpTaskObjective};
pub use pipeline::{prepare, topology_in_series_order, AdjacencySource, PrepareOptions, Prepared};
pub use report::{MetricsReport, Predictions, TaskMetrics};
pub use sweep::{ablation_suite, median, sweep_hidden, sweep_horizon, SweepKind, SweepRow, SweepSpec, SweepTable, Variant};
