//! Per-task feed-forward baseline: node k's flattened `L x F` window through
//! one ReLU hidden layer to a scalar, with no cross-node terms and no
//! recurrence.

use super::evaluate::Scale;
use super::report::Predictions;
use crate::data::WindowBatch;
use crate::error::{Error, Result};
use crate::model::TrainConfig;
use crate::numkit::{derive_seed, opt_step, rng::streams, Matrix, Objective, OptimizerState, ParamSet, RandomSource};

const W1: usize = 0;
const B1: usize = 1;
const W2: usize = 2;
const B2: usize = 3;

fn features(w: &WindowBatch, node: usize) -> Vec<f64> {
    w.inputs.iter().flat_map(|x| x.row(node).iter().copied()).collect()
}

fn init(inputs: usize, hidden: usize, seed: u64) -> ParamSet {
    let mut rng = RandomSource::with_stream(seed, streams::INIT);
    let mut draw = |r: usize, c: usize, fan_in: usize| {
        let b = 1.0 / (fan_in as f64).sqrt();
        Matrix::new(r, c, (0..r * c).map(|_| rng.uniform(-b, b)).collect()).expect("shape")
    };
    let mut p = ParamSet::new();
    p.push("hidden.weight", draw(inputs, hidden, inputs));
    p.push("hidden.bias", draw(1, hidden, inputs));
    p.push("out.weight", draw(1, hidden, hidden));
    p.push("out.bias", draw(1, 1, hidden));
    p
}

fn forward(p: &ParamSet, x: &[f64]) -> (Vec<f64>, f64) {
    let w1 = p.get(W1);
    let mut h = p.get(B1).data().to_vec();
    for (i, &xi) in x.iter().enumerate() {
        for (hj, wij) in h.iter_mut().zip(w1.row(i)) {
            *hj += xi * wij;
        }
    }
    let y = h
        .iter()
        .zip(p.get(W2).data())
        .map(|(hj, w)| hj.max(0.0) * w)
        .sum::<f64>()
        + p.get(B2).item();
    (h, y)
}

/// Squared error of one task's network over a set of `(input, target)` pairs.
pub struct MlpTaskObjective<'a> {
    pub samples: &'a [(Vec<f64>, f64)],
}

impl Objective for MlpTaskObjective<'_> {
    fn value(&self, p: &ParamSet) -> Result<f64> {
        let n = self.samples.len() as f64;
        Ok(self.samples.iter().map(|(x, t)| (forward(p, x).1 - t).powi(2)).sum::<f64>() / n)
    }

    fn value_and_grad(&self, p: &ParamSet) -> Result<(f64, ParamSet)> {
        let n = self.samples.len() as f64;
        let mut g = p.zeros_like();
        let mut total = 0.0;
        let w2 = p.get(W2).data().to_vec();
        for (x, t) in self.samples {
            let (pre, y) = forward(p, x);
            total += (y - t).powi(2);
            let dy = 2.0 * (y - t) / n;
            g.get_mut(B2).data_mut()[0] += dy;
            let mut dpre = vec![0.0; pre.len()];
            for j in 0..pre.len() {
                if pre[j] > 0.0 {
                    g.get_mut(W2).data_mut()[j] += dy * pre[j];
                    dpre[j] = dy * w2[j];
                }
            }
            for (b, d) in g.get_mut(B1).data_mut().iter_mut().zip(&dpre) {
                *b += d;
            }
            let gw1 = g.get_mut(W1);
            for (i, &xi) in x.iter().enumerate() {
                for (gij, d) in gw1.row_mut(i).iter_mut().zip(&dpre) {
                    *gij += xi * d;
                }
            }
        }
        Ok((total / n, g))
    }
}

/// One trained network per task.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpBaseline {
    pub nets: Vec<ParamSet>,
}

fn samples(windows: &[WindowBatch], node: usize) -> Vec<(Vec<f64>, f64)> {
    windows
        .iter()
        .filter_map(|w| {
            let (y, m) = w.last_targets()?;
            m[node].then(|| (features(w, node), y[node]))
        })
        .collect()
}

impl MlpBaseline {
    /// Train each task's network on the last-step target of every window,
    /// with the same optimizer, epochs and batch size as the main model.
    pub fn fit(windows: &[WindowBatch], hidden: usize, tc: &TrainConfig, seed: u64) -> Result<MlpBaseline> {
        tc.validate()?;
        let first = windows.first().ok_or_else(|| Error::Data("no training windows".into()))?;
        let k = first.inputs[0].rows();
        let inputs = first.len() * first.inputs[0].cols();
        let mut nets = Vec::with_capacity(k);
        for node in 0..k {
            let task_seed = derive_seed(seed, &[node as u64]);
            let mut p = init(inputs, hidden.max(1), task_seed);
            let data = samples(windows, node);
            if data.is_empty() {
                return Err(Error::Data(format!("task {node} has no valid training targets")));
            }
            let mut opt = OptimizerState::new(&p, tc.optimizer);
            let mut rng = RandomSource::with_stream(task_seed, streams::SHUFFLE);
            let mut order: Vec<usize> = (0..data.len()).collect();
            for epoch in 1..=tc.epochs {
                if tc.shuffle {
                    rng.shuffle(&mut order);
                }
                for batch in order.chunks(tc.batch_size) {
                    let chunk: Vec<(Vec<f64>, f64)> = batch.iter().map(|&i| data[i].clone()).collect();
                    let (_, mut g) = MlpTaskObjective { samples: &chunk }.value_and_grad(&p)?;
                    if let Some(max) = tc.grad_clip {
                        let norm = g.global_norm();
                        if norm > max {
                            g.scale_in_place(max / norm);
                        }
                    }
                    opt_step(&mut p, &g, &mut opt).map_err(|e| e.at_epoch(epoch))?;
                }
            }
            nets.push(p);
        }
        Ok(MlpBaseline { nets })
    }

    pub fn predict(&self, w: &WindowBatch) -> Vec<f64> {
        self.nets
            .iter()
            .enumerate()
            .map(|(node, p)| forward(p, &features(w, node)).1)
            .collect()
    }

    pub fn predict_windows(&self, windows: &[WindowBatch], scale: Scale<'_>) -> Result<Predictions> {
        let mut out = Predictions::default();
        for w in windows {
            let mut p = self.predict(w);
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::numeric("mlp baseline prediction"));
            }
            let (y, m) = w.last_targets().expect("window has targets");
            let mut y = y.to_vec();
            scale.apply(&mut p);
            scale.apply(&mut y);
            out.push(w.start + w.len() - 1, p, y, m.to_vec());
        }
        Ok(out)
    }
}
