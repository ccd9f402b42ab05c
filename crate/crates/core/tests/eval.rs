mod common;

use cloudcast::data::{synth_generate, window, AlignedSeries, SynthConfig};
use cloudcast::eval::metrics::{mae, mape, mse, rmae};
use cloudcast::eval::{
    ablation_suite, baseline_persistence, evaluate, median, prepare, sweep_hidden, sweep_horizon,
    AdjacencySource, MetricSet, MlpBaseline, MlpTaskObjective, PrepareOptions, Prepared, Scale,
    SweepSpec, Variant,
};
use cloudcast::model::{train, ModelConfig, TrainConfig};
use cloudcast::numkit::{grad_check, AdamConfig, Matrix, ParamSet, RandomSource};
use cloudcast::Error;
use proptest::prelude::*;

const ALL: [bool; 2] = [true, true];

#[test]
fn metric_hand_values() {
    let (p, y) = ([1.0, 2.0], [0.0, 0.0]);
    assert_eq!(mse(&p, &y, &ALL).unwrap(), 2.5);
    assert_eq!(mae(&p, &y, &ALL).unwrap(), 1.5);
    // Both denominators hit the 1e-3 floor: 100 * (1000 + 2000) / 2.
    assert!((mape(&p, &y, &ALL).unwrap() - 150000.0).abs() < 1e-6);
    let y2 = [2.0, 4.0];
    assert_eq!(mae(&p, &y2, &ALL).unwrap(), 1.5);
    assert_eq!(rmae(&p, &y2, &ALL).unwrap(), 0.5);
    assert_eq!(mape(&p, &y2, &ALL).unwrap(), 50.0);
}

#[test]
fn metrics_respect_mask_and_shape() {
    let m = [true, false];
    assert_eq!(mse(&[1.0, 100.0], &[0.0, 0.0], &m).unwrap(), 1.0);
    assert!(matches!(mse(&[1.0], &[0.0], &[false]), Err(Error::Data(_))));
    assert!(matches!(mae(&[1.0, 2.0], &[0.0], &[true]), Err(Error::Shape(_))));
}

#[test]
fn aggregate_is_count_weighted() {
    let a = MetricSet { mse: 1.0, mae: 2.0, mape: 3.0, rmae: 4.0, count: 1 };
    let b = MetricSet { mse: 4.0, mae: 8.0, mape: 0.0, rmae: 1.0, count: 3 };
    let w = MetricSet::weighted_mean(&[a, b]).unwrap();
    assert_eq!(w.count, 4);
    assert_eq!(w.mse, 13.0 / 4.0);
    assert_eq!(w.mae, 26.0 / 4.0);
    assert_eq!(w.rmae, 7.0 / 4.0);
}

fn vectors() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..50).prop_flat_map(|n| {
        (prop::collection::vec(-100.0f64..100.0, n), prop::collection::vec(-100.0f64..100.0, n))
    })
}

proptest! {
    #[test]
    fn metric_invariants((p, y) in vectors(), rot in 0usize..50) {
        let mask = vec![true; p.len()];
        let m = MetricSet::compute(&p, &y, &mask).unwrap();
        prop_assert!(m.mse >= 0.0 && m.mae >= 0.0 && m.mape >= 0.0 && m.rmae >= 0.0);
        prop_assert!(m.mae * m.mae <= m.mse * (1.0 + 1e-12));
        let r = rot % p.len();
        let (mut p2, mut y2) = (p.clone(), y.clone());
        p2.rotate_left(r);
        y2.rotate_left(r);
        let m2 = MetricSet::compute(&p2, &y2, &mask).unwrap();
        prop_assert!((m.mse - m2.mse).abs() <= 1e-9 * m.mse.max(1.0));
        prop_assert!((m.mae - m2.mae).abs() <= 1e-9 * m.mae.max(1.0));
        prop_assert!((m.rmae - m2.rmae).abs() <= 1e-9 * m.rmae.max(1.0));
    }
}

fn column(values: Vec<f64>) -> AlignedSeries {
    AlignedSeries::dense(vec!["a".into()], vec!["x".into()], 0, values).unwrap()
}

#[test]
fn persistence_on_ramp_and_constant() {
    let ramp = column((0..20).map(f64::from).collect());
    let p = baseline_persistence(&ramp, 2).unwrap();
    assert_eq!(p.len(), 18);
    let r = p.report("persistence", &["a".into()], false).unwrap();
    assert_eq!(r.aggregate.mae, 2.0);
    assert_eq!(r.aggregate.mse, 4.0);
    let flat = column(vec![3.0; 10]);
    let r = baseline_persistence(&flat, 1).unwrap().report("p", &["a".into()], false).unwrap();
    assert_eq!(r.aggregate.mse, 0.0);
}

#[test]
fn persistence_error_grows_on_random_walks() {
    for seed in 0..5 {
        let mut rng = RandomSource::new(seed);
        let mut x = 0.0;
        let walk: Vec<f64> = (0..4000)
            .map(|_| {
                x += rng.normal();
                x
            })
            .collect();
        let s = column(walk);
        let mut prev = 0.0;
        for tau in [1, 2, 4, 8] {
            let r = baseline_persistence(&s, tau).unwrap().report("p", &["a".into()], false).unwrap();
            assert!(r.aggregate.mae >= prev);
            prev = r.aggregate.mae;
        }
    }
}

fn scenario(nodes: usize, steps: usize) -> Prepared {
    let mut c = SynthConfig::new(nodes, 2, steps);
    c.seed = 7;
    let out = synth_generate(&c).unwrap();
    prepare(&out.series, &PrepareOptions::default(), 12, &AdjacencySource::Topology(out.topology)).unwrap()
}

fn small_model(nodes: usize) -> ModelConfig {
    let mut c = ModelConfig::new(nodes, 2);
    c.hidden = 4;
    c.window = 6;
    c.validate().unwrap()
}

fn quick_train(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        batch_size: 16,
        optimizer: AdamConfig { learning_rate: 0.01, ..Default::default() },
        ..Default::default()
    }
}

#[test]
fn mlp_gradients_match_finite_differences() {
    let mut rng = RandomSource::new(2);
    let samples: Vec<(Vec<f64>, f64)> =
        (0..6).map(|_| ((0..5).map(|_| rng.normal()).collect(), rng.normal())).collect();
    let mut p = ParamSet::new();
    let mut draw = |r: usize, c: usize| Matrix::new(r, c, (0..r * c).map(|_| rng.uniform(-1.0, 1.0)).collect()).unwrap();
    p.push("hidden.weight", draw(5, 7));
    p.push("hidden.bias", draw(1, 7));
    p.push("out.weight", draw(1, 7));
    p.push("out.bias", draw(1, 1));
    let report = grad_check(&MlpTaskObjective { samples: &samples }, &p, 1e-6, 1e-5).unwrap();
    assert!(report.passed, "{report:?}");
}

#[test]
fn mlp_is_deterministic_and_untrained_is_finite() {
    let data = scenario(3, 200);
    let c = small_model(3);
    let tw = window(&data.train, c.window, c.horizon, c.context).unwrap();
    let a = MlpBaseline::fit(&tw, 8, &quick_train(3), 5).unwrap();
    assert_eq!(a, MlpBaseline::fit(&tw, 8, &quick_train(3), 5).unwrap());
    assert_ne!(a, MlpBaseline::fit(&tw, 8, &quick_train(3), 6).unwrap());
    let zero = MlpBaseline::fit(&tw, 8, &quick_train(0), 5).unwrap();
    let p = zero.predict_windows(&tw, Scale::Normalized).unwrap();
    assert!(p.preds.iter().flatten().all(|v| v.is_finite()));
}

#[test]
fn denormalized_metrics_use_raw_units() {
    let data = scenario(3, 200);
    let c = small_model(3);
    let test = window(&data.test, c.window, c.horizon, c.context).unwrap();
    let params = cloudcast::model::ModelParams::init(&c, 0);
    let tasks = data.task_names();
    let (norm, np) = evaluate(&params, &c, &data.adjacency, &test, &tasks, Scale::Normalized).unwrap();
    let raw = Scale::Raw { stats: &data.stats, feature: 0 };
    let (den, dp) = evaluate(&params, &c, &data.adjacency, &test, &tasks, raw).unwrap();
    assert!(den.denormalized && !norm.denormalized);
    for k in 0..3 {
        let s = data.stats.std[k * 2];
        let expected = norm.per_task[k].metrics.mse * s * s;
        assert!((den.per_task[k].metrics.mse - expected).abs() < 1e-9 * expected.max(1.0));
        let back = dp.preds[0][k];
        assert!((back - (np.preds[0][k] * s + data.stats.mean[k * 2])).abs() < 1e-12);
    }
}

#[test]
fn sweeps_have_one_row_per_cell_and_parallel_matches_serial() {
    let data = scenario(3, 240);
    let base = small_model(3);
    let tc = quick_train(2);
    let seeds = [0, 1];
    let spec = SweepSpec {
        data: &data,
        base: &base,
        train: &tc,
        seeds: &seeds,
        master_seed: 4,
        config_hash: "h",
        denormalize: false,
        parallel: false,
    };
    let hidden = sweep_hidden(&spec, &[8, 2]).unwrap();
    assert_eq!(hidden.rows.len(), 4);
    assert_eq!(hidden.points(), vec!["2", "8"]);
    let horizon = sweep_horizon(&spec, &[1, 2, 3]).unwrap();
    assert_eq!(horizon.rows.len(), 6);
    assert!(horizon.rows.iter().all(|r| r.persistence.is_some()));
    let ablation = ablation_suite(&spec, &Variant::ALL).unwrap();
    assert_eq!(ablation.rows.len(), 12);
    // Every variant of one seed shares its run seed.
    let s0: Vec<u64> = ablation.rows.iter().filter(|r| r.seed == 0).map(|r| r.run_seed).collect();
    assert!(s0.windows(2).all(|w| w[0] == w[1]));

    let par = SweepSpec { parallel: true, ..spec };
    assert_eq!(sweep_hidden(&par, &[8, 2]).unwrap(), hidden);
    assert_eq!(ablation_suite(&par, &Variant::ALL).unwrap().to_csv(), ablation.to_csv());
    assert!(matches!(sweep_hidden(&spec, &[2, 2]), Err(Error::Config(_))));
}

#[test]
fn median_of_even_and_odd() {
    assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
    assert_eq!(median(&mut [4.0, 1.0, 3.0, 2.0]), Some(2.5));
    assert_eq!(median(&mut []), None);
}

#[test]
fn overfit_model_evaluates_near_zero_on_its_training_windows() {
    let mut sc = SynthConfig::new(2, 1, 120);
    sc.noise = 0.0;
    sc.burst_rate = 0.0;
    sc.season_amplitude = 1.0;
    sc.season_period = 12.0;
    let out = synth_generate(&sc).unwrap();
    let opts = PrepareOptions { clip: None, split: [0.8, 0.1, 0.1] };
    let data = prepare(&out.series, &opts, 10, &AdjacencySource::Identity).unwrap();
    let mut c = ModelConfig::new(2, 1);
    c.hidden = 8;
    c.window = 6;
    let c = c.validate().unwrap();
    let tw = window(&data.train, 6, 1, 2).unwrap();
    let tc = TrainConfig {
        epochs: 150,
        batch_size: 8,
        optimizer: AdamConfig { learning_rate: 0.02, ..Default::default() },
        ..Default::default()
    };
    let (params, _) = train(&tw, &[], &data.adjacency, &c, &tc).unwrap();
    let (report, _) = evaluate(&params, &c, &data.adjacency, &tw, &data.task_names(), Scale::Normalized).unwrap();
    assert!(report.aggregate.mse < 1e-2, "{}", report.aggregate.mse);
}
