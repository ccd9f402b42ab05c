#![allow(dead_code)]

use cloudcast::data::WindowBatch;
use cloudcast::model::{slot, ModelConfig, ModelParams};
use cloudcast::numkit::{Matrix, RandomSource};
use cloudcast::structure::{row_normalize, AdjacencyMatrix};

pub fn random_matrix(rng: &mut RandomSource, r: usize, c: usize, scale: f64) -> Matrix {
    Matrix::new(r, c, (0..r * c).map(|_| rng.uniform(-scale, scale)).collect()).unwrap()
}

/// Windows of uniform noise with every target valid.
pub fn random_windows(rng: &mut RandomSource, config: &ModelConfig, n: usize) -> Vec<WindowBatch> {
    let rows = config.predictions_per_window();
    (0..n)
        .map(|i| WindowBatch {
            start: i,
            inputs: (0..config.window)
                .map(|_| random_matrix(rng, config.nodes, config.features, 1.0))
                .collect(),
            targets: (0..rows)
                .map(|_| (0..config.nodes).map(|_| rng.uniform(-1.0, 1.0)).collect())
                .collect(),
            target_mask: vec![vec![true; config.nodes]; rows],
        })
        .collect()
}

/// Random row-stochastic adjacency with positive diagonal.
pub fn random_adjacency(rng: &mut RandomSource, k: usize) -> AdjacencyMatrix {
    let mut raw = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            let w = if i == j { rng.uniform(0.2, 1.0) } else if rng.bernoulli(0.6) { rng.uniform(0.0, 1.0) } else { 0.0 };
            raw.set(i, j, w);
        }
    }
    row_normalize(&raw).unwrap()
}

/// Initialized parameters with the scalar gates drawn wider than the default
/// init so that each gate is exercised away from 0.5.
pub fn random_params(rng: &mut RandomSource, config: &ModelConfig, seed: u64) -> ModelParams {
    let mut p = ModelParams::init(config, seed);
    for s in [slot::B_ALPHA, slot::W_LAMBDA, slot::B_LAMBDA, slot::U, slot::C] {
        p.get_mut(s).data_mut()[0] = rng.uniform(-1.5, 1.5);
    }
    p
}
