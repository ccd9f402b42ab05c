//! Full model, its three ablations and both baselines on shared seeds.

use cloudcast::data::{synth_generate, SynthConfig};
use cloudcast::eval::{ablation_suite, prepare, AdjacencySource, PrepareOptions, SweepSpec, Variant};
use cloudcast::model::{ModelConfig, TrainConfig};
use cloudcast::numkit::AdamConfig;

fn main() -> cloudcast::Result<()> {
    let mut synth = SynthConfig::new(6, 2, 1000);
    synth.seed = 7;
    let out = synth_generate(&synth)?;
    let data = prepare(&out.series, &PrepareOptions::default(), 16, &AdjacencySource::Topology(out.topology))?;

    let mut base = ModelConfig::new(6, 2);
    base.hidden = 8;
    base.window = 8;
    let base = base.validate()?;
    let tc = TrainConfig {
        epochs: 30,
        optimizer: AdamConfig { learning_rate: 0.01, ..Default::default() },
        patience: Some(5),
        ..Default::default()
    };
    let spec = SweepSpec {
        data: &data,
        base: &base,
        train: &tc,
        seeds: &[0, 1, 2],
        master_seed: 1,
        config_hash: "",
        denormalize: false,
        parallel: true,
    };
    let table = ablation_suite(&spec, &Variant::ALL)?;
    for p in table.points() {
        println!("{p:>12}  median MSE {:.4}", table.median(&p, |r| r.aggregate.mse).unwrap());
    }
    Ok(())
}
