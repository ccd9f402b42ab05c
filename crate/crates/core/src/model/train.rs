use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::backward::{mean_loss, window_loss_grad};
use super::{ModelConfig, ModelParams};
use crate::data::WindowBatch;
use crate::error::{Error, Result};
use crate::numkit::{opt_step, rng::streams, AdamConfig, OptimizerState, RandomSource};
use crate::structure::AdjacencyMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "d_epochs")]
    pub epochs: usize,
    /// Windows per optimizer step.
    #[serde(default = "d_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub optimizer: AdamConfig,
    /// Stop after this many epochs without a validation improvement.
    #[serde(default)]
    pub patience: Option<usize>,
    #[serde(default = "d_shuffle")]
    pub shuffle: bool,
    /// Rescale the batch gradient to at most this global norm.
    #[serde(default)]
    pub grad_clip: Option<f64>,
}

fn d_epochs() -> usize {
    100
}
fn d_batch() -> usize {
    8
}
fn d_shuffle() -> bool {
    true
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: d_epochs(),
            batch_size: d_batch(),
            optimizer: AdamConfig::default(),
            patience: None,
            shuffle: d_shuffle(),
            grad_clip: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if let Some(c) = self.grad_clip {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::Config(format!("grad_clip {c} must be positive")));
            }
        }
        let o = &self.optimizer;
        if !(o.learning_rate.is_finite() && o.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&o.beta1) || !(0.0..1.0).contains(&o.beta2) || !(o.epsilon > 0.0) {
            return Err(Error::Config("betas must lie in [0, 1) and epsilon be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean window loss over the epoch's batches, before each update.
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochLog>,
    /// Epoch whose parameters were returned, when validation picked them.
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
    #[serde(skip)]
    pub elapsed: Duration,
}

/// Ignores wall-clock time.
impl PartialEq for TrainingLog {
    fn eq(&self, other: &Self) -> bool {
        self.epochs == other.epochs
            && self.best_epoch == other.best_epoch
            && self.stopped_early == other.stopped_early
    }
}

impl TrainingLog {
    pub fn final_train_loss(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.train_loss)
    }
}

/// Fit parameters with Adam on shuffled mini-batches of windows.
///
/// Parameters start from `ModelParams::init(config, config.seed)`. When
/// validation windows are given, the parameters of the best validation epoch
/// are returned and `patience` (if set) stops training early. A non-finite
/// value anywhere aborts with the failing epoch (1-based) attached.
pub fn train(
    train_windows: &[WindowBatch],
    val_windows: &[WindowBatch],
    adjacency: &AdjacencyMatrix,
    config: &ModelConfig,
    tc: &TrainConfig,
) -> Result<(ModelParams, TrainingLog)> {
    train_from(
        ModelParams::init(config, config.seed),
        train_windows,
        val_windows,
        adjacency,
        config,
        tc,
    )
}

/// [`train`] starting from given parameters.
pub fn train_from(
    init: ModelParams,
    train_windows: &[WindowBatch],
    val_windows: &[WindowBatch],
    adjacency: &AdjacencyMatrix,
    config: &ModelConfig,
    tc: &TrainConfig,
) -> Result<(ModelParams, TrainingLog)> {
    tc.validate()?;
    if train_windows.is_empty() {
        return Err(Error::Data("no training windows".into()));
    }
    let clock = Instant::now();
    let mut params = init;
    let mut opt = OptimizerState::new(params.set(), tc.optimizer);
    let mut rng = RandomSource::with_stream(config.seed, streams::SHUFFLE);
    let mut order: Vec<usize> = (0..train_windows.len()).collect();
    let mut log = TrainingLog::default();
    let mut best: Option<(f64, ModelParams, usize)> = None;

    for epoch in 1..=tc.epochs {
        let entry = (|| -> Result<EpochLog> {
            if tc.shuffle {
                rng.shuffle(&mut order);
            }
            let mut total = 0.0;
            for batch in order.chunks(tc.batch_size) {
                let mut grads = params.set().zeros_like();
                for &i in batch {
                    let (l, g, _) = window_loss_grad(&train_windows[i], adjacency, &params, config)?;
                    total += l;
                    grads.add_assign(&g);
                }
                grads.scale_in_place(1.0 / batch.len() as f64);
                if let Some(max) = tc.grad_clip {
                    let norm = grads.global_norm();
                    if norm > max {
                        grads.scale_in_place(max / norm);
                    }
                }
                opt_step(params.set_mut(), &grads, &mut opt)?;
            }
            let train_loss = total / train_windows.len() as f64;
            if !train_loss.is_finite() {
                return Err(Error::numeric("training loss"));
            }
            let val_loss = if val_windows.is_empty() {
                None
            } else {
                Some(mean_loss(val_windows, adjacency, &params, config)?)
            };
            Ok(EpochLog {
                epoch,
                train_loss,
                val_loss,
            })
        })()
        .map_err(|e| e.at_epoch(epoch))?;
        let val = entry.val_loss;
        log.epochs.push(entry);

        if let Some(v) = val {
            if best.as_ref().is_none_or(|(b, _, _)| v < *b) {
                best = Some((v, params.clone(), epoch));
            }
            let since = epoch - best.as_ref().map_or(epoch, |b| b.2);
            if tc.patience.is_some_and(|p| since >= p) {
                log.stopped_early = epoch < tc.epochs;
                break;
            }
        }
    }
    if let Some((_, p, epoch)) = best {
        params = p;
        log.best_epoch = Some(epoch);
    }
    log.elapsed = clock.elapsed();
    Ok((params, log))
}
