//! Compare the hand-written backward pass against central differences.

use cloudcast::data::WindowBatch;
use cloudcast::model::{ModelConfig, ModelParams, TrainObjective};
use cloudcast::numkit::{grad_check, Matrix, RandomSource};
use cloudcast::structure::{adjacency_from_topology, TopologyEdge, TopologySpec};

fn main() -> cloudcast::Result<()> {
    let mut config = ModelConfig::new(3, 2);
    config.hidden = 8;
    config.horizon = 2;
    let config = config.validate()?;

    let spec = TopologySpec {
        nodes: vec!["a".into(), "b".into(), "c".into()],
        edges: vec![
            TopologyEdge { src: "a".into(), dst: "b".into(), weight: None },
            TopologyEdge { src: "c".into(), dst: "a".into(), weight: Some(0.5) },
        ],
    };
    let adjacency = adjacency_from_topology(&spec)?;

    let mut rng = RandomSource::new(42);
    let rows = config.predictions_per_window();
    let mut noise = |r, c| Matrix::new(r, c, (0..r * c).map(|_| rng.normal()).collect()).unwrap();
    let windows: Vec<WindowBatch> = (0..3)
        .map(|start| WindowBatch {
            start,
            inputs: (0..config.window).map(|_| noise(3, 2)).collect(),
            targets: (0..rows).map(|_| noise(1, 3).into_data()).collect(),
            target_mask: vec![vec![true; 3]; rows],
        })
        .collect();

    let params = ModelParams::init(&config, 7);
    let objective = TrainObjective { windows: &windows, adjacency: &adjacency, config: &config };
    let report = grad_check(&objective, params.set(), 1e-5, 1e-4)?;
    println!(
        "checked {} entries, max relative error {:.3e} ({:?}), passed: {}",
        report.checked, report.max_rel_error, report.worst, report.passed
    );
    Ok(())
}
