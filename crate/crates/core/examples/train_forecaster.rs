//! Train on a synthetic workload and score the test split against persistence.

use cloudcast::data::{synth_generate, window, SynthConfig};
use cloudcast::eval::{evaluate, persistence_windows, prepare, AdjacencySource, PrepareOptions, Scale};
use cloudcast::model::{train, ModelConfig, TrainConfig};
use cloudcast::numkit::AdamConfig;

fn main() -> cloudcast::Result<()> {
    let mut synth = SynthConfig::new(5, 2, 800);
    synth.seed = 1;
    let out = synth_generate(&synth)?;
    let data = prepare(&out.series, &PrepareOptions::default(), 16, &AdjacencySource::Correlation { threshold: 0.3 })?;

    let mut config = ModelConfig::new(5, 2);
    config.hidden = 8;
    config.window = 8;
    let config = config.validate()?;
    let split = |s| window(s, config.window, config.horizon, config.context);
    let (tw, vw, test) = (split(&data.train)?, split(&data.val)?, split(&data.test)?);

    let tc = TrainConfig {
        epochs: 30,
        optimizer: AdamConfig { learning_rate: 0.01, ..Default::default() },
        patience: Some(5),
        ..Default::default()
    };
    let (params, log) = train(&tw, &vw, &data.adjacency, &config, &tc)?;
    for e in &log.epochs {
        println!("epoch {:>3}  train {:.4}  val {:.4}", e.epoch, e.train_loss, e.val_loss.unwrap_or(f64::NAN));
    }

    let tasks = data.task_names();
    let raw = Scale::Raw { stats: &data.stats, feature: data.train.target_feature };
    let (report, _) = evaluate(&params, &config, &data.adjacency, &test, &tasks, raw)?;
    let naive = persistence_windows(&test, data.train.target_feature, raw).report("persistence", &tasks, true)?;
    print!("{}", report.to_csv());
    println!("persistence MSE {:.4}, model MSE {:.4}", naive.aggregate.mse, report.aggregate.mse);
    Ok(())
}
