//! Error growth with the forecast horizon, next to persistence.

use cloudcast::data::{synth_generate, SynthConfig};
use cloudcast::eval::{prepare, sweep_horizon, AdjacencySource, PrepareOptions, SweepSpec};
use cloudcast::model::{ModelConfig, TrainConfig};
use cloudcast::numkit::AdamConfig;

fn main() -> cloudcast::Result<()> {
    let mut synth = SynthConfig::new(4, 2, 600);
    synth.seed = 5;
    let out = synth_generate(&synth)?;
    let data = prepare(&out.series, &PrepareOptions::default(), 16, &AdjacencySource::Topology(out.topology))?;

    let mut base = ModelConfig::new(4, 2);
    base.hidden = 8;
    base.window = 8;
    let base = base.validate()?;
    let tc = TrainConfig {
        epochs: 15,
        optimizer: AdamConfig { learning_rate: 0.01, ..Default::default() },
        ..Default::default()
    };
    let spec = SweepSpec {
        data: &data,
        base: &base,
        train: &tc,
        seeds: &[0, 1],
        master_seed: 9,
        config_hash: "",
        denormalize: false,
        parallel: true,
    };
    let table = sweep_horizon(&spec, &[1, 2, 4, 8])?;
    println!("tau   model MSE  persistence MSE");
    for p in table.points() {
        println!(
            "{p:>3}   {:>9.4}  {:>15.4}",
            table.median(&p, |r| r.aggregate.mse).unwrap(),
            table.persistence_median(&p, |r| r.aggregate.mse).unwrap()
        );
    }
    Ok(())
}
