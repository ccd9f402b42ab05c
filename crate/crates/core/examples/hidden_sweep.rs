//! Sweep the hidden width with several seeds and print the median test MSE.

use cloudcast::data::{synth_generate, SynthConfig};
use cloudcast::eval::{prepare, sweep_hidden, AdjacencySource, PrepareOptions, SweepSpec};
use cloudcast::model::{ModelConfig, TrainConfig};
use cloudcast::numkit::AdamConfig;

fn main() -> cloudcast::Result<()> {
    let mut synth = SynthConfig::new(4, 2, 600);
    synth.seed = 5;
    let out = synth_generate(&synth)?;
    let data = prepare(&out.series, &PrepareOptions::default(), 16, &AdjacencySource::Topology(out.topology))?;

    let mut base = ModelConfig::new(4, 2);
    base.window = 8;
    let base = base.validate()?;
    let tc = TrainConfig {
        epochs: 10,
        optimizer: AdamConfig { learning_rate: 0.01, ..Default::default() },
        ..Default::default()
    };
    let spec = SweepSpec {
        data: &data,
        base: &base,
        train: &tc,
        seeds: &[0, 1, 2],
        master_seed: 9,
        config_hash: "",
        denormalize: false,
        parallel: true,
    };
    let table = sweep_hidden(&spec, &[2, 8, 32])?;
    for p in table.points() {
        println!("d={p:>3}  median MSE {:.4}", table.median(&p, |r| r.aggregate.mse).unwrap());
    }
    Ok(())
}
