use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use super::config::{AdjacencyMode, RunConfig};
use crate::artifact::{fingerprint, write_atomic, write_json};
use crate::data::io::{read_series, series_meta, write_series, TOPOLOGY_FILE};
use crate::data::{
    align, clip_outliers, ingest_csv, normalize, synth_generate, window, AlignedSeries, Schema,
};
use crate::error::{Error, Result};
use crate::eval::{
    ablation_suite, predict_windows, prepare, sweep_hidden, sweep_horizon, AdjacencySource,
    Prepared, Scale, SweepSpec, SweepTable,
};
use crate::model::{predict, train, ModelConfig, SavedModel, TrainingLog};
use crate::structure::TopologySpec;

#[derive(Debug, Parser)]
#[command(name = "cloudcast", version, about = "Multi-task forecasting of coupled cluster telemetry")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepArg {
    Hidden,
    Horizon,
    Ablation,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic coupled series and its ground-truth topology.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the synth section's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse headerless CSV traces and align them on a step grid.
    Ingest {
        /// Schema JSON file or preset name (`machine-usage`).
        #[arg(long)]
        schema: String,
        /// Files or directories.
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        /// Bucket width in seconds.
        #[arg(long)]
        bucket: i64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = crate::data::DEFAULT_MAX_GAP)]
        max_gap: usize,
        #[arg(long, default_value_t = crate::data::DEFAULT_TOLERANCE)]
        tolerance: f64,
        /// Metric predicted by every task; defaults to the first.
        #[arg(long)]
        target: Option<String>,
    },
    /// Train a model and write it with its training log.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_model: PathBuf,
        /// Defaults to the model path with a `.log.json` suffix.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Score a trained model on the test split.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Also write every test prediction as CSV.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Train and score a grid of models.
    Sweep {
        #[arg(long, value_enum)]
        kind: SweepArg,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Data directory; otherwise the config's data dir or synth section.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Run cells one at a time.
        #[arg(long)]
        serial: bool,
    },
    /// Predict all tasks `horizon` steps after step `--at`.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        at: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth { config, out, seed } => cmd_synth(config, out, *seed),
        Command::Ingest {
            schema,
            input,
            bucket,
            out,
            max_gap,
            tolerance,
            target,
        } => cmd_ingest(schema, input, *bucket, out, *max_gap, *tolerance, target.as_deref()),
        Command::Train {
            data,
            config,
            out_model,
            log,
        } => cmd_train(data, config, out_model, log.as_deref()),
        Command::Eval {
            model,
            data,
            report,
            predictions,
        } => cmd_eval(model, data, report, predictions.as_deref()),
        Command::Sweep {
            kind,
            config,
            out,
            data,
            serial,
        } => cmd_sweep(*kind, config, out, data.as_deref(), !serial),
        Command::Predict { model, data, at, out } => cmd_predict(model, data, *at, out),
    }
}

fn sibling(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

fn cmd_synth(config: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let mut synth = cfg
        .synth
        .ok_or_else(|| Error::Config(format!("{}: missing field `synth`", config.display())))?;
    if let Some(s) = seed {
        synth.seed = s;
    }
    let clock = Instant::now();
    let generated = synth_generate(&synth)?;
    let mut meta = series_meta(&generated.series);
    meta.source = Some(serde_json::to_value(&synth)?);
    meta.source_hash = Some(fingerprint(&synth)?);
    write_series(out, &generated.series, &meta)?;
    write_json(&out.join(TOPOLOGY_FILE), &generated.topology)?;
    println!(
        "synth: {} steps x {} nodes x {} features, {} ground-truth edges -> {}",
        synth.steps,
        synth.nodes,
        synth.features,
        generated.topology.edges.len(),
        out.display()
    );
    eprintln!("synth took {:.3?}", clock.elapsed());
    Ok(())
}

fn resolve_schema(name: &str) -> Result<Schema> {
    let path = Path::new(name);
    if path.is_file() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        return Schema::from_json(&text);
    }
    Schema::preset(name).ok_or_else(|| {
        Error::Config(format!(
            "unknown schema {name:?}; pass a schema JSON file or a preset (machine-usage)"
        ))
    })
}

#[derive(Serialize)]
struct IngestSource<'a> {
    schema: &'a Schema,
    inputs: Vec<String>,
    bucket_seconds: i64,
    max_gap: usize,
    tolerance: f64,
    lines: usize,
    skipped: usize,
    duplicates: usize,
}

fn cmd_ingest(
    schema: &str,
    inputs: &[PathBuf],
    bucket: i64,
    out: &Path,
    max_gap: usize,
    tolerance: f64,
    target: Option<&str>,
) -> Result<()> {
    let schema = resolve_schema(schema)?;
    if bucket <= 0 {
        return Err(Error::Config(format!("bucket {bucket} must be positive")));
    }
    let ingested = ingest_csv(inputs, &schema, tolerance)?;
    let target = match target {
        None => 0,
        Some(t) => ingested
            .metric_names
            .iter()
            .position(|n| n == t)
            .ok_or_else(|| Error::Config(format!("target metric {t:?} not in schema")))?,
    };
    let series = align(&ingested.records, &ingested.metric_names, target, bucket, max_gap)?;
    let source = IngestSource {
        schema: &schema,
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        bucket_seconds: bucket,
        max_gap,
        tolerance,
        lines: ingested.lines,
        skipped: ingested.skipped,
        duplicates: ingested.duplicates,
    };
    let mut meta = series_meta(&series);
    meta.source = Some(serde_json::to_value(&source)?);
    meta.source_hash = Some(fingerprint(&source)?);
    write_series(out, &series, &meta)?;
    println!(
        "ingest: {} records ({} malformed skipped, {} duplicates) -> {} steps x {} nodes",
        ingested.records.len(),
        ingested.skipped,
        ingested.duplicates,
        series.steps(),
        series.nodes()
    );
    Ok(())
}

fn adjacency_source(
    cfg: &RunConfig,
    data_dir: Option<&Path>,
    fallback: Option<&TopologySpec>,
) -> Result<AdjacencySource> {
    Ok(match cfg.adjacency.mode {
        AdjacencyMode::Identity => AdjacencySource::Identity,
        AdjacencyMode::Correlation => AdjacencySource::Correlation {
            threshold: cfg.adjacency.threshold,
        },
        AdjacencyMode::Topology => {
            let path = cfg
                .adjacency
                .path
                .clone()
                .or_else(|| data_dir.map(|d| d.join(TOPOLOGY_FILE)).filter(|p| p.is_file()));
            match (path, fallback) {
                (Some(p), _) => AdjacencySource::Topology(TopologySpec::load(&p)?),
                (None, Some(spec)) => AdjacencySource::Topology(spec.clone()),
                (None, None) => {
                    return Err(Error::Config("adjacency mode topology needs a topology file".into()))
                }
            }
        }
    })
}

fn model_config(cfg: &RunConfig, series: &AlignedSeries) -> Result<ModelConfig> {
    cfg.model.resolve(series.nodes(), series.features(), cfg.seed)
}

#[derive(Serialize)]
struct TrainLogFile<'a> {
    config_hash: &'a str,
    config: &'a RunConfig,
    seed: u64,
    train_windows: usize,
    val_windows: usize,
    log: &'a TrainingLog,
}

fn cmd_train(data: &Path, config: &Path, out_model: &Path, log_path: Option<&Path>) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let hash = cfg.hash()?;
    let (series, _) = read_series(data)?;
    let mc = model_config(&cfg, &series)?;
    let source = adjacency_source(&cfg, Some(data), None)?;
    let prepared = prepare(&series, &cfg.data.prepare_options(), mc.window + mc.horizon, &source)?;
    for w in &prepared.warnings {
        eprintln!("warning: {w}");
    }
    let train_w = window(&prepared.train, mc.window, mc.horizon, mc.context)?;
    let val_w = window(&prepared.val, mc.window, mc.horizon, mc.context)?;
    let (params, log) = train(&train_w, &val_w, &prepared.adjacency, &mc, &cfg.train)?;

    let mut saved = SavedModel::new(mc, prepared.adjacency.clone(), &params);
    saved.stats = Some(prepared.stats.clone());
    saved.run_config = Some(serde_json::to_value(&cfg)?);
    saved.config_hash = Some(hash.clone());
    saved.save(out_model)?;
    let log_path = log_path.map(Path::to_path_buf).unwrap_or_else(|| sibling(out_model, "log.json"));
    write_json(
        &log_path,
        &TrainLogFile {
            config_hash: &hash,
            config: &cfg,
            seed: cfg.seed,
            train_windows: train_w.len(),
            val_windows: val_w.len(),
            log: &log,
        },
    )?;
    println!(
        "train: {} epochs on {} windows, final train loss {:.6}{} -> {}",
        log.epochs.len(),
        train_w.len(),
        log.final_train_loss().unwrap_or(f64::NAN),
        log.best_epoch.map(|e| format!(", best val epoch {e}")).unwrap_or_default(),
        out_model.display()
    );
    eprintln!("train took {:.3?}", log.elapsed);
    Ok(())
}

/// The model, its run config and the data re-prepared exactly as in training.
struct Loaded {
    model: SavedModel,
    cfg: RunConfig,
    series: AlignedSeries,
    prepared: Prepared,
}

fn load_for_inference(model_path: &Path, data: &Path) -> Result<Loaded> {
    let model = SavedModel::load(model_path)?;
    let cfg: RunConfig = match &model.run_config {
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| Error::Data(format!("{}: stored config: {e}", model_path.display())))?,
        None => RunConfig::default(),
    };
    let (series, _) = read_series(data)?;
    let mc = &model.config;
    if (series.nodes(), series.features()) != (mc.nodes, mc.features) {
        return Err(Error::Data(format!(
            "data is {} nodes x {} features, model expects {} x {}",
            series.nodes(),
            series.features(),
            mc.nodes,
            mc.features
        )));
    }
    let prepared = prepare(
        &series,
        &cfg.data.prepare_options(),
        mc.window + mc.horizon,
        &AdjacencySource::Identity,
    )?;
    if model.stats.as_ref().is_some_and(|s| *s != prepared.stats) {
        return Err(Error::Data("data differs from the data the model was trained on".into()));
    }
    Ok(Loaded {
        model,
        cfg,
        series,
        prepared,
    })
}

fn scale<'a>(l: &'a Loaded) -> Scale<'a> {
    match (&l.model.stats, l.cfg.eval.denormalize) {
        (Some(stats), true) => Scale::Raw {
            stats,
            feature: l.series.target_feature,
        },
        _ => Scale::Normalized,
    }
}

fn cmd_eval(model_path: &Path, data: &Path, report_path: &Path, predictions: Option<&Path>) -> Result<()> {
    let clock = Instant::now();
    let l = load_for_inference(model_path, data)?;
    let mc = &l.model.config;
    let params = l.model.model_params()?;
    let test = window(&l.prepared.test, mc.window, mc.horizon, mc.context)?;
    let sc = scale(&l);
    let preds = predict_windows(&test, &l.model.adjacency, &params, mc, sc, l.prepared.offsets[2])?;
    let tasks = l.prepared.task_names();
    let mut report = preds.report("model", &tasks, sc.is_raw())?;
    report.seed = l.cfg.seed;
    report.config_hash = l.model.config_hash.clone().unwrap_or_default();
    report.run_config = l.model.run_config.clone();
    write_json(report_path, &report)?;
    if l.cfg.output.csv {
        write_atomic(&sibling(report_path, "csv"), report.to_csv().as_bytes())?;
    }
    if let Some(p) = predictions {
        write_atomic(p, preds.to_csv(&tasks).as_bytes())?;
    }
    let a = &report.aggregate;
    println!(
        "eval: {} samples  MSE {:.6}  MAE {:.6}  MAPE {:.3}%  RMAE {:.6}",
        preds.len(),
        a.mse,
        a.mae,
        a.mape,
        a.rmae
    );
    eprintln!("eval took {:.3?}", clock.elapsed());
    Ok(())
}

fn cmd_predict(model_path: &Path, data: &Path, at: usize, out: &Path) -> Result<()> {
    let l = load_for_inference(model_path, data)?;
    let stats = l
        .model
        .stats
        .as_ref()
        .ok_or_else(|| Error::Data("model has no normalization stats".into()))?;
    let cleaned = match l.cfg.data.clip {
        Some([lo, hi]) => clip_outliers(&l.series, lo, hi)?,
        None => l.series.clone(),
    };
    let normalized = normalize(&cleaned, stats)?;
    let params = l.model.model_params()?;
    let mut preds = predict(&normalized, at, &l.model.adjacency, &params, &l.model.config)?;
    scale(&l).apply(&mut preds);
    let mut csv = String::from("task,prediction\n");
    for (task, p) in l.series.node_ids.iter().zip(&preds) {
        csv.push_str(&format!("{task},{p}\n"));
    }
    write_atomic(out, csv.as_bytes())?;
    println!(
        "predict: {} tasks at step {} + {} -> {}",
        preds.len(),
        at,
        l.model.config.horizon,
        out.display()
    );
    Ok(())
}

fn cmd_sweep(kind: SweepArg, config: &Path, out: &Path, data: Option<&Path>, parallel: bool) -> Result<()> {
    let cfg = RunConfig::load(config)?;
    let hash = cfg.hash()?;
    let clock = Instant::now();
    let dir = data.map(Path::to_path_buf).or_else(|| cfg.data.dir.clone());
    let (series, fallback) = match (&dir, &cfg.synth) {
        (Some(d), _) => (read_series(d)?.0, None),
        (None, Some(s)) => {
            let g = synth_generate(s)?;
            (g.series, Some(g.topology))
        }
        (None, None) => {
            return Err(Error::Config("sweep needs --data, data.dir or a synth section".into()))
        }
    };
    let base = model_config(&cfg, &series)?;
    let max_tau = match kind {
        SweepArg::Horizon => cfg.eval.horizons.iter().copied().max().unwrap_or(base.horizon),
        _ => base.horizon,
    };
    let source = adjacency_source(&cfg, dir.as_deref(), fallback.as_ref())?;
    let prepared = prepare(&series, &cfg.data.prepare_options(), base.window + max_tau, &source)?;
    let spec = SweepSpec {
        data: &prepared,
        base: &base,
        train: &cfg.train,
        seeds: &cfg.eval.seeds,
        master_seed: cfg.seed,
        config_hash: &hash,
        denormalize: cfg.eval.denormalize,
        parallel,
    };
    let mut table = match kind {
        SweepArg::Hidden => sweep_hidden(&spec, &cfg.eval.hidden_dims)?,
        SweepArg::Horizon => sweep_horizon(&spec, &cfg.eval.horizons)?,
        SweepArg::Ablation => ablation_suite(&spec, &cfg.eval.variants)?,
    };
    table.run_config = Some(serde_json::to_value(&cfg)?);
    write_json(out, &table)?;
    if cfg.output.csv {
        write_atomic(&sibling(out, "csv"), table.to_csv().as_bytes())?;
    }
    print_medians(&table);
    eprintln!("sweep took {:.3?}", clock.elapsed());
    Ok(())
}

fn print_medians(table: &SweepTable) {
    println!("{:>12}  {:>10}  {:>10}  {:>10}", table.axis, "MSE", "MAE", "MAPE%");
    for p in table.points() {
        let m = |f: fn(&crate::eval::MetricsReport) -> f64| table.median(&p, f).unwrap_or(f64::NAN);
        println!(
            "{:>12}  {:>10.5}  {:>10.5}  {:>10.3}",
            p,
            m(|r| r.aggregate.mse),
            m(|r| r.aggregate.mae),
            m(|r| r.aggregate.mape)
        );
    }
}
