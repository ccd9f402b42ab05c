//! Acceptance suite. Runs as a plain binary and prints one PASS/FAIL line per
//! criterion; exits non-zero if any criterion fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use cloudcast::data::{synth_generate, window, SynthConfig};
use cloudcast::eval::metrics::{mae, mape, mse, rmae};
use cloudcast::eval::{
    ablation_suite, prepare, sweep_hidden, sweep_horizon, AdjacencySource,
    PrepareOptions, Prepared, SweepSpec, SweepTable, Variant,
};
use cloudcast::model::{
    encode, forward_inputs, fuse_state, gate_fuse, loss, mean_loss, propagate, train, HiddenState,
    ModelConfig, TrainConfig, TrainObjective,
};
use cloudcast::numkit::{grad_check, AdamConfig, Matrix, RandomSource};
use cloudcast::structure::row_normalize;
use common::{random_adjacency, random_matrix, random_params, random_windows};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn gradient_soundness() -> Outcome {
    let clock = Instant::now();
    let mut c = ModelConfig::new(3, 2);
    c.hidden = 8;
    c.context = 2;
    c.window = 12;
    c.horizon = 2;
    c.seed = 17;
    let c = c.validate().unwrap();
    let mut rng = RandomSource::new(17);
    let windows = random_windows(&mut rng, &c, 2);
    let adjacency = random_adjacency(&mut rng, 3);
    let params = random_params(&mut rng, &c, c.seed);
    let obj = TrainObjective { windows: &windows, adjacency: &adjacency, config: &c };
    let report = grad_check(&obj, params.set(), 1e-5, 1e-4).unwrap();
    let elapsed = clock.elapsed();
    outcome(
        report.max_rel_error < 1e-4 && elapsed < Duration::from_secs(10),
        format!(
            "{} entries, max rel error {:.2e} at {:?}, {:.2?}",
            report.checked, report.max_rel_error, report.worst, elapsed
        ),
    )
}

fn overfit_sanity() -> Outcome {
    let clock = Instant::now();
    let mut sc = SynthConfig::new(4, 2, 400);
    sc.noise = 0.0;
    sc.burst_rate = 0.0;
    sc.season_amplitude = 1.0;
    sc.seed = 3;
    let out = synth_generate(&sc).unwrap();
    let opts = PrepareOptions { clip: None, split: [0.7, 0.1, 0.2] };
    let data = prepare(&out.series, &opts, 10, &AdjacencySource::Topology(out.topology)).unwrap();
    let mut c = ModelConfig::new(4, 2);
    c.hidden = 16;
    c.window = 8;
    let c = c.validate().unwrap();
    let tw = window(&data.train, c.window, c.horizon, c.context).unwrap();
    let tc = TrainConfig {
        epochs: 500,
        batch_size: 16,
        optimizer: AdamConfig { learning_rate: 0.01, ..Default::default() },
        ..Default::default()
    };
    let (params, _) = train(&tw, &[], &data.adjacency, &c, &tc).unwrap();
    let train_mse = mean_loss(&tw, &data.adjacency, &params, &c).unwrap();
    let elapsed = clock.elapsed();
    outcome(
        train_mse < 1e-2 && elapsed < Duration::from_secs(60),
        format!("train MSE {train_mse:.2e} over {} windows, {:.2?}", tw.len(), elapsed),
    )
}

/// Coupled scenario shared by the ordering and sweep criteria.
fn coupled() -> Prepared {
    let mut sc = SynthConfig::new(6, 2, 1000);
    sc.coupling = 0.6;
    sc.seed = 7;
    let out = synth_generate(&sc).unwrap();
    prepare(&out.series, &PrepareOptions::default(), 16, &AdjacencySource::Topology(out.topology)).unwrap()
}

fn coupled_model() -> ModelConfig {
    let mut c = ModelConfig::new(6, 2);
    c.hidden = 8;
    c.window = 8;
    c.validate().unwrap()
}

fn coupled_train() -> TrainConfig {
    TrainConfig {
        epochs: 30,
        batch_size: 8,
        optimizer: AdamConfig { learning_rate: 0.01, ..Default::default() },
        patience: Some(5),
        ..Default::default()
    }
}

fn med(table: &SweepTable, point: &str) -> f64 {
    table.median(point, |r| r.aggregate.mse).unwrap()
}

fn ordering(data: &Prepared) -> Outcome {
    let (base, tc) = (coupled_model(), coupled_train());
    let seeds = [0, 1, 2, 3, 4];
    let spec = SweepSpec {
        data,
        base: &base,
        train: &tc,
        seeds: &seeds,
        master_seed: 1,
        config_hash: "",
        denormalize: false,
        parallel: true,
    };
    let table = ablation_suite(&spec, &Variant::ALL).unwrap();
    let full = med(&table, "full");
    let persistence = med(&table, "persistence");
    let learned = ["full", "no_graph", "no_fusion", "no_dynamic", "mlp"];
    let passed = full < med(&table, "no_graph")
        && full < med(&table, "mlp")
        && learned.iter().all(|v| med(&table, v) < persistence);
    let detail = table.points().iter().map(|p| format!("{p} {:.4}", med(&table, p))).collect::<Vec<_>>().join(", ");
    outcome(passed, format!("median test MSE: {detail}"))
}

fn hidden_sweep(data: &Prepared) -> Outcome {
    let (base, tc) = (coupled_model(), coupled_train());
    let seeds = [0, 1, 2];
    let spec = SweepSpec {
        data,
        base: &base,
        train: &tc,
        seeds: &seeds,
        master_seed: 1,
        config_hash: "",
        denormalize: false,
        parallel: true,
    };
    let table = sweep_hidden(&spec, &[2, 8, 32, 128]).unwrap();
    let medians: Vec<(String, f64)> = table.points().into_iter().map(|p| { let m = med(&table, &p); (p, m) }).collect();
    let min = medians.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    let at_two = medians[0].1;
    let (argmin, _) = medians.iter().find(|m| m.1 == min).unwrap();
    let overfit = if medians.last().unwrap().1 > min { "rises past the minimum" } else { "no rise" };
    let detail = medians.iter().map(|(p, m)| format!("d={p} {m:.4}")).collect::<Vec<_>>().join(", ");
    outcome(at_two > min, format!("{detail}; minimum at d={argmin}, d=128 {overfit}"))
}

/// Non-decreasing with at most one adjacent drop, itself at most 5%.
fn near_monotone(v: &[f64]) -> bool {
    let drops: Vec<f64> = v.windows(2).filter(|w| w[1] < w[0]).map(|w| (w[0] - w[1]) / w[0]).collect();
    drops.len() <= 1 && drops.iter().all(|&d| d <= 0.05)
}

fn horizon_sweep(data: &Prepared) -> Outcome {
    let (base, tc) = (coupled_model(), coupled_train());
    let seeds = [0, 1, 2];
    let spec = SweepSpec {
        data,
        base: &base,
        train: &tc,
        seeds: &seeds,
        master_seed: 1,
        config_hash: "",
        denormalize: false,
        parallel: true,
    };
    let table = sweep_horizon(&spec, &[1, 2, 4, 8]).unwrap();
    let points = table.points();
    let series = |f: fn(&cloudcast::eval::MetricsReport) -> f64, persistence: bool| -> Vec<f64> {
        points
            .iter()
            .map(|p| if persistence { table.persistence_median(p, f).unwrap() } else { table.median(p, f).unwrap() })
            .collect()
    };
    let curves = [
        ("model MSE", series(|r| r.aggregate.mse, false)),
        ("model MAE", series(|r| r.aggregate.mae, false)),
        ("persistence MSE", series(|r| r.aggregate.mse, true)),
        ("persistence MAE", series(|r| r.aggregate.mae, true)),
    ];
    let passed = curves.iter().all(|(_, v)| near_monotone(v));
    let detail = curves
        .iter()
        .map(|(n, v)| format!("{n} {}", v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join("/")))
        .collect::<Vec<_>>()
        .join("; ");
    outcome(passed, format!("tau 1/2/4/8: {detail}"))
}

/// Predictions, targets, mask and the expected `[mse, mae, mape, rmae]`.
type MetricCase<'a> = (&'a [f64], &'a [f64], &'a [bool], [f64; 4]);

fn metric_oracle() -> Outcome {
    let cases: [MetricCase; 5] = [
        (&[1.0, 2.0], &[0.0, 0.0], &[true, true], [2.5, 1.5, 150000.0, 1500.0]),
        (&[1.0, 2.0], &[2.0, 4.0], &[true, true], [2.5, 1.5, 50.0, 0.5]),
        (&[0.5, -0.5, 1.5], &[1.0, -1.0, 1.0], &[true; 3], [0.25, 0.5, 50.0, 0.5]),
        (&[3.0, -2.0, 7.0, 0.25], &[3.0, -2.0, 7.0, 0.25], &[true; 4], [0.0; 4]),
        (
            &[2.0, 100.0, -1.0, 4.0],
            &[1.0, 0.0, -3.0, 4.0],
            &[true, false, true, true],
            [5.0 / 3.0, 1.0, 500.0 / 9.0, 0.375],
        ),
    ];
    let mut worst: f64 = 0.0;
    for (p, y, m, expected) in cases {
        let got = [mse(p, y, m).unwrap(), mae(p, y, m).unwrap(), mape(p, y, m).unwrap(), rmae(p, y, m).unwrap()];
        for (g, e) in got.iter().zip(expected) {
            worst = worst.max((g - e).abs() / e.abs().max(1.0));
        }
    }
    outcome(worst <= 1e-12, format!("5 vectors x 4 metrics, max relative deviation {worst:.1e}"))
}

fn cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_cloudcast")).args(args).output().unwrap().status.success()
}

fn run_pipeline(dir: &Path, config: &str) -> Vec<(String, Vec<u8>)> {
    let p = |n: &str| dir.join(n).to_str().unwrap().to_string();
    std::fs::write(dir.join("run.json"), config).unwrap();
    let steps: [Vec<String>; 6] = [
        vec!["synth".into(), "--config".into(), p("run.json"), "--out".into(), p("data")],
        vec!["train".into(), "--data".into(), p("data"), "--config".into(), p("run.json"), "--out-model".into(), p("model.json")],
        vec!["eval".into(), "--model".into(), p("model.json"), "--data".into(), p("data"), "--report".into(), p("report.json"), "--predictions".into(), p("preds.csv")],
        vec!["predict".into(), "--model".into(), p("model.json"), "--data".into(), p("data"), "--at".into(), "250".into(), "--out".into(), p("predict.csv")],
        vec!["sweep".into(), "--kind".into(), "ablation".into(), "--config".into(), p("run.json"), "--out".into(), p("sweep.json")],
        vec!["sweep".into(), "--kind".into(), "ablation".into(), "--config".into(), p("run.json"), "--out".into(), p("sweep-serial.json"), "--serial".into()],
    ];
    for s in &steps {
        let args: Vec<&str> = s.iter().map(String::as_str).collect();
        assert!(cli(&args), "{args:?} failed");
    }
    let names = [
        "data/series.csv", "data/series.json", "data/topology.json", "model.json", "model.log.json",
        "report.json", "report.csv", "preds.csv", "predict.csv", "sweep.json", "sweep.csv",
        "sweep-serial.json", "sweep-serial.csv",
    ];
    names.iter().map(|n| (n.to_string(), std::fs::read(dir.join(n)).unwrap())).collect()
}

fn determinism() -> Outcome {
    let config = r#"{
  "seed": 11,
  "synth": {"nodes": 4, "features": 2, "steps": 300, "seed": 2},
  "model": {"hidden": 6, "window": 6},
  "train": {"epochs": 4, "batch_size": 8, "optimizer": {"learning_rate": 0.01}},
  "adjacency": {"mode": "topology"},
  "eval": {"seeds": [0, 1, 2], "variants": ["full", "no_graph", "no_fusion", "no_dynamic", "mlp", "persistence"]}
}"#;
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = run_pipeline(a.path(), config);
    let second = run_pipeline(b.path(), config);
    let differing: Vec<&str> = first.iter().zip(&second).filter(|(x, y)| x.1 != y.1).map(|(x, _)| x.0.as_str()).collect();
    let lookup = |n: &str| &first.iter().find(|f| f.0 == n).unwrap().1;
    let par_serial = lookup("sweep.json") == lookup("sweep-serial.json") && lookup("sweep.csv") == lookup("sweep-serial.csv");
    outcome(
        differing.is_empty() && par_serial,
        format!(
            "{} artifacts compared across reruns, differing: {:?}; parallel == serial sweep: {par_serial}",
            first.len(),
            differing
        ),
    )
}

const CASES: usize = 1000;

fn invariants() -> Outcome {
    let mut rng = RandomSource::new(2024);
    let mut violations = [0usize; 6];
    for case in 0..CASES {
        let k = 2 + case % 5;
        let f = 1 + case % 3;
        let mut c = ModelConfig::new(k, f);
        c.hidden = 2 + case % 7;
        c.window = 4;
        c.context = 1 + case % 3;
        let c = c.validate().unwrap();
        let params = random_params(&mut rng, &c, case as u64);
        let adjacency = random_adjacency(&mut rng, k);
        let x = random_matrix(&mut rng, k, f, 3.0);
        let mut state = HiddenState::zeros(&c);
        state.fused = random_matrix(&mut rng, k, c.hidden, 1.0);
        state.prev_input = random_matrix(&mut rng, k, f, 3.0);

        // State fusion stays between the encoding and the previous state.
        let h = encode(&x, &params).unwrap();
        let (fused, alpha) = fuse_state(&h, &state, &params, true).unwrap();
        let convex = alpha.iter().all(|a| *a > 0.0 && *a < 1.0)
            && (0..k).all(|n| {
                (0..c.hidden).all(|j| {
                    let (a, b) = (h.get(n, j), state.fused.get(n, j));
                    let v = fused.get(n, j);
                    v >= a.min(b) - 1e-12 && v <= a.max(b) + 1e-12
                })
            });
        violations[0] += usize::from(!convex);

        let z = propagate(&fused, &adjacency, &params, true).unwrap();
        violations[1] += usize::from(!z.data().iter().all(|v| *v > 0.0 && *v < 1.0));

        let (gated, lambda) = gate_fuse(&z, &fused, &x, &state, &params).unwrap();
        let gate_ok = lambda.iter().all(|l| *l > 0.0 && *l < 1.0)
            && (0..k).all(|n| {
                (0..c.hidden).all(|j| {
                    let (a, b) = (z.get(n, j), fused.get(n, j));
                    let v = gated.get(n, j);
                    v >= a.min(b) - 1e-12 && v <= a.max(b) + 1e-12
                })
            });
        violations[2] += usize::from(!gate_ok);

        let raw = Matrix::new(k, k, (0..k * k).map(|i| if i % (k + 1) == 0 { rng.uniform(0.01, 5.0) } else { rng.uniform(0.0, 5.0) }).collect()).unwrap();
        let a = row_normalize(&raw).unwrap();
        let stochastic = (0..k).all(|i| {
            let row = a.matrix().row(i);
            (row.iter().sum::<f64>() - 1.0).abs() < 1e-12 && row.iter().all(|v| *v >= 0.0)
        });
        violations[3] += usize::from(!stochastic);

        let inputs: Vec<Matrix> = (0..c.window).map(|_| random_matrix(&mut rng, k, f, 2.0)).collect();
        let mut perm: Vec<usize> = (0..k).collect();
        rng.shuffle(&mut perm);
        let moved: Vec<Matrix> = inputs
            .iter()
            .map(|x| Matrix::from_rows(&perm.iter().map(|&i| x.row(i).to_vec()).collect::<Vec<_>>()).unwrap())
            .collect();
        let (base, _) = forward_inputs(&inputs, &adjacency, &params, &c).unwrap();
        let (shifted, _) = forward_inputs(&moved, &adjacency.permuted(&perm), &params.permute_tasks(&perm), &c).unwrap();
        let equivariant = base
            .iter()
            .zip(&shifted)
            .all(|(b, s)| perm.iter().enumerate().all(|(i, &p)| (s[i] - b[p]).abs() <= 1e-10));
        violations[4] += usize::from(!equivariant);

        let targets: Vec<Vec<f64>> = base.iter().map(|r| r.iter().map(|_| rng.normal()).collect()).collect();
        let mask: Vec<Vec<bool>> = base.iter().map(|r| r.iter().map(|_| rng.bernoulli(0.8)).collect()).collect();
        let weights: Vec<f64> = (0..k).map(|_| rng.uniform(0.1, 2.0)).collect();
        let nonneg = match loss(&base, &targets, &mask, &weights) {
            Ok(l) => l >= 0.0,
            Err(_) => mask.iter().flatten().all(|m| !m),
        };
        violations[5] += usize::from(!nonneg);
    }
    let names = ["fusion convexity", "propagation range", "gate convexity", "row-stochastic", "equivariance", "loss >= 0"];
    let detail = names.iter().zip(violations).map(|(n, v)| format!("{n} {v}")).collect::<Vec<_>>().join(", ");
    outcome(violations.iter().all(|v| *v == 0), format!("{CASES} cases each, violations: {detail}"))
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected = |n: usize| filter.is_empty() || filter.iter().any(|f| f == &n.to_string());
    let mut failures = 0;
    let mut report = |n: usize, name: &str, run: &dyn Fn() -> Outcome| {
        if !selected(n) {
            return;
        }
        let clock = Instant::now();
        let o = run();
        failures += usize::from(!o.passed);
        println!(
            "criterion {n} [{name}]: {} ({:.1?}) {}",
            if o.passed { "PASS" } else { "FAIL" },
            clock.elapsed(),
            o.detail
        );
    };
    report(1, "gradient soundness", &gradient_soundness);
    report(2, "overfit sanity", &overfit_sanity);
    let data = std::cell::OnceCell::new();
    let coupled_data = || data.get_or_init(coupled);
    report(3, "ablation ordering", &|| ordering(coupled_data()));
    report(4, "hidden width sweep", &|| hidden_sweep(coupled_data()));
    report(5, "horizon sweep", &|| horizon_sweep(coupled_data()));
    report(6, "metric oracle", &metric_oracle);
    report(7, "determinism", &determinism);
    report(8, "invariant suite", &invariants);
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
