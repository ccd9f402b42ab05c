use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::metrics::{MetricSet, MAPE_EPSILON, RMAE_DEFINITION};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub task: String,
    #[serde(flatten)]
    pub metrics: MetricSet,
}

/// Per-task and aggregate error metrics of one evaluated model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub label: String,
    pub per_task: Vec<TaskMetrics>,
    /// Count-weighted mean over tasks.
    pub aggregate: MetricSet,
    /// Whether metrics are in raw units rather than normalized ones.
    pub denormalized: bool,
    pub mape_epsilon: f64,
    pub rmae_definition: String,
    pub config_hash: String,
    pub seed: u64,
    /// Resolved run configuration, when produced by a configured run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_config: Option<serde_json::Value>,
    #[serde(skip)]
    pub wall_clock: Duration,
}

/// Ignores wall-clock time.
impl PartialEq for MetricsReport {
    fn eq(&self, o: &Self) -> bool {
        self.label == o.label
            && self.per_task == o.per_task
            && self.aggregate == o.aggregate
            && self.denormalized == o.denormalized
            && self.mape_epsilon == o.mape_epsilon
            && self.rmae_definition == o.rmae_definition
            && self.config_hash == o.config_hash
            && self.seed == o.seed
            && self.run_config == o.run_config
    }
}

/// Predictions and targets of one evaluation, one row per sample.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Predictions {
    /// Step of the last input behind each row.
    pub steps: Vec<usize>,
    pub preds: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub mask: Vec<Vec<bool>>,
}

impl Predictions {
    pub fn push(&mut self, step: usize, preds: Vec<f64>, targets: Vec<f64>, mask: Vec<bool>) {
        self.steps.push(step);
        self.preds.push(preds);
        self.targets.push(targets);
        self.mask.push(mask);
    }

    pub fn len(&self) -> usize {
        self.preds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preds.is_empty()
    }

    fn column(&self, k: usize) -> (Vec<f64>, Vec<f64>, Vec<bool>) {
        (
            self.preds.iter().map(|r| r[k]).collect(),
            self.targets.iter().map(|r| r[k]).collect(),
            self.mask.iter().map(|r| r[k]).collect(),
        )
    }

    /// Build a report from the rows; task `k` is named `tasks[k]`.
    pub fn report(&self, label: &str, tasks: &[String], denormalized: bool) -> Result<MetricsReport> {
        if self.is_empty() {
            return Err(Error::Data(format!("{label}: nothing to evaluate")));
        }
        let mut per_task = Vec::with_capacity(tasks.len());
        for (k, task) in tasks.iter().enumerate() {
            let (p, y, m) = self.column(k);
            per_task.push(TaskMetrics {
                task: task.clone(),
                metrics: MetricSet::compute(&p, &y, &m)
                    .map_err(|e| Error::Data(format!("{label}, task {task}: {e}")))?,
            });
        }
        let sets: Vec<MetricSet> = per_task.iter().map(|t| t.metrics).collect();
        Ok(MetricsReport {
            label: label.to_string(),
            aggregate: MetricSet::weighted_mean(&sets)?,
            per_task,
            denormalized,
            mape_epsilon: MAPE_EPSILON,
            rmae_definition: RMAE_DEFINITION.into(),
            config_hash: String::new(),
            seed: 0,
            run_config: None,
            wall_clock: Duration::ZERO,
        })
    }

    /// `step,task,prediction,target` rows; masked targets are left empty.
    pub fn to_csv(&self, tasks: &[String]) -> String {
        let mut out = String::from("step,task,prediction,target\n");
        for (i, &step) in self.steps.iter().enumerate() {
            for (k, task) in tasks.iter().enumerate() {
                let _ = write!(out, "{step},{task},{}", self.preds[i][k]);
                if self.mask[i][k] {
                    let _ = write!(out, ",{}", self.targets[i][k]);
                } else {
                    out.push(',');
                }
                out.push('\n');
            }
        }
        out
    }
}

pub const METRICS_CSV_HEADER: &str = "label,task,count,mse,mae,mape,rmae";

fn metrics_line(out: &mut String, prefix: &str, task: &str, m: &MetricSet) {
    let _ = writeln!(
        out,
        "{prefix},{task},{},{},{},{},{}",
        m.count, m.mse, m.mae, m.mape, m.rmae
    );
}

impl MetricsReport {
    /// One row per task plus an `all` row.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{METRICS_CSV_HEADER}\n");
        self.csv_rows(&mut out, &self.label);
        out
    }

    pub(crate) fn csv_rows(&self, out: &mut String, prefix: &str) {
        for t in &self.per_task {
            metrics_line(out, prefix, &t.task, &t.metrics);
        }
        metrics_line(out, prefix, "all", &self.aggregate);
    }
}
