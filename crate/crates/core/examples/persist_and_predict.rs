//! Save a trained model, load it back and forecast from the end of a series.

use cloudcast::data::{normalize, synth_generate, window, SynthConfig};
use cloudcast::eval::{prepare, AdjacencySource, PrepareOptions};
use cloudcast::model::{predict, train, ModelConfig, SavedModel, TrainConfig};

fn main() -> cloudcast::Result<()> {
    let mut synth = SynthConfig::new(3, 2, 400);
    synth.seed = 2;
    let out = synth_generate(&synth)?;
    let data = prepare(&out.series, &PrepareOptions { clip: None, ..Default::default() }, 16, &AdjacencySource::Identity)?;

    let mut config = ModelConfig::new(3, 2);
    config.hidden = 6;
    config.window = 8;
    let config = config.validate()?;
    let tw = window(&data.train, config.window, config.horizon, config.context)?;
    let tc = TrainConfig { epochs: 5, ..Default::default() };
    let (params, _) = train(&tw, &[], &data.adjacency, &config, &tc)?;

    let dir = tempfile::tempdir().map_err(|e| cloudcast::Error::io(".", e))?;
    let path = dir.path().join("model.json");
    let mut saved = SavedModel::new(config, data.adjacency.clone(), &params);
    saved.stats = Some(data.stats.clone());
    saved.save(&path)?;

    let loaded = SavedModel::load(&path)?;
    let stats = loaded.stats.as_ref().expect("saved with stats");
    let series = normalize(&out.series, stats)?;
    let last = series.steps() - 1;
    let mut preds = predict(&series, last, &loaded.adjacency, &loaded.model_params()?, &loaded.config)?;
    for (k, p) in preds.iter_mut().enumerate() {
        *p = stats.denormalize(k, series.target_feature, *p);
    }
    for (id, p) in series.node_ids.iter().zip(&preds) {
        println!("{id}: step {} forecast {p:.4}", last + loaded.config.horizon);
    }
    Ok(())
}
