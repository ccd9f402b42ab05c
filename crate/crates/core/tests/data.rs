use std::io::Write;
use std::path::PathBuf;

use cloudcast::data::io::{read_series, series_meta, write_series};
use cloudcast::data::{
    align, clip_outliers, ingest_csv, normalize, split, synth_generate, window, AlignedSeries,
    NormStats, RawRecord, Schema, SynthConfig,
};
use cloudcast::numkit::RandomSource;
use cloudcast::Error;
use proptest::prelude::*;

fn column(values: &[f64]) -> AlignedSeries {
    AlignedSeries::dense(vec!["a".into()], vec!["x".into()], 0, values.to_vec()).unwrap()
}

fn ramp(t: usize, k: usize) -> AlignedSeries {
    let values = (0..t).flat_map(|s| (0..k).map(move |n| (s * 10 + n) as f64)).collect();
    AlignedSeries::dense((0..k).map(|n| format!("n{n}")).collect(), vec!["x".into()], 0, values).unwrap()
}

fn masked(series: &AlignedSeries, t: usize, node: usize) -> AlignedSeries {
    let (k, f) = (series.nodes(), series.features());
    let mut mask = series.mask().to_vec();
    mask[t * k + node] = false;
    let _ = f;
    AlignedSeries::new(
        series.start,
        series.bucket_seconds,
        series.node_ids.clone(),
        series.feature_names.clone(),
        series.target_feature,
        series.values().to_vec(),
        mask,
    )
    .unwrap()
}

#[test]
fn window_counts() {
    let (l, tau, m) = (6, 2, 2);
    assert_eq!(window(&ramp(l + tau, 2), l, tau, m).unwrap().len(), 1);
    assert_eq!(window(&ramp(l + tau + 3, 2), l, tau, m).unwrap().len(), 4);
    assert!(window(&ramp(l + tau - 1, 2), l, tau, m).unwrap().is_empty());
}

#[test]
fn window_targets_are_offset_by_horizon() {
    let s = ramp(20, 2);
    let w = &window(&s, 5, 3, 2).unwrap()[4];
    assert_eq!(w.start, 4);
    assert_eq!(w.targets.len(), 4);
    // Emitting step t (1-based) of a window starting at 4 reads step 4 + t - 1 + 3.
    assert_eq!(w.targets[0], vec![s.target(4 + 1 + 3, 0), s.target(4 + 1 + 3, 1)]);
    assert_eq!(w.targets[3][1], s.target(4 + 4 + 3, 1));
    assert_eq!(w.inputs[0], s.step_matrix(4));
}

#[test]
fn masked_step_drops_covering_windows() {
    let s = masked(&ramp(20, 2), 10, 1);
    let ws = window(&s, 4, 1, 2).unwrap();
    // Windows may not touch step 10 through inputs or targets.
    assert!(ws.iter().all(|w| w.start + 4 < 10 || w.start > 10));
    assert_eq!(ws.len(), (10 - 5 + 1) + (20 - 11 - 5 + 1));
}

#[test]
fn split_is_chronological() {
    let s = ramp(100, 1);
    let (a, b, c) = split(&s, [0.7, 0.1, 0.2], 5).unwrap();
    assert_eq!((a.steps(), b.steps(), c.steps()), (70, 10, 20));
    assert!(a.timestamp(a.steps() - 1) < b.timestamp(0));
    assert!(b.timestamp(b.steps() - 1) < c.timestamp(0));
    assert!(matches!(split(&s, [0.7, 0.1, 0.2], 11), Err(Error::Data(_))));
    assert!(matches!(split(&s, [0.7, 0.2, 0.2], 1), Err(Error::Config(_))));
}

#[test]
fn windows_never_straddle_a_split() {
    let s = ramp(100, 1);
    let (train, val, _) = split(&s, [0.7, 0.1, 0.2], 5).unwrap();
    let tw = window(&train, 4, 1, 1).unwrap();
    let last = tw.last().unwrap();
    let max_target = last.targets.last().unwrap()[0];
    assert!(max_target < val.target(0, 0));
    assert_eq!(tw.len(), 70 - 5 + 1);
}

#[test]
fn clip_leaves_identical_values() {
    let s = column(&[2.5; 50]);
    assert_eq!(clip_outliers(&s, 0.005, 0.995).unwrap(), s);
}

#[test]
fn clip_spike_to_upper_order_statistic() {
    let mut rng = RandomSource::new(1);
    let mut values: Vec<f64> = (0..1000).map(|_| rng.unit()).collect();
    values[517] = 1e6;
    let clipped = clip_outliers(&column(&values), 0.005, 0.995).unwrap();
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    // Upper position 0.995 * 999 = 994.005 -> order statistic 994.
    let hi = sorted[994];
    assert_eq!(clipped.value(517, 0, 0), hi);
    assert!(hi <= 1.0);
    let lo = sorted[5];
    let min = (0..1000).map(|t| clipped.value(t, 0, 0)).fold(f64::INFINITY, f64::min);
    assert_eq!(min, lo);
}

#[test]
fn clip_skips_masked_entries() {
    let s = masked(&column(&(0..100).map(f64::from).collect::<Vec<_>>()), 99, 0);
    let c = clip_outliers(&s, 0.1, 0.9).unwrap();
    assert!(!c.is_valid(99, 0));
    assert!(c.value(99, 0, 0).is_nan());
}

proptest! {
    #[test]
    fn clip_is_idempotent_and_monotone(
        values in prop::collection::vec(-1e6f64..1e6, 1..300),
        lo in 0.0f64..0.2,
        hi in 0.8f64..1.0,
    ) {
        let s = column(&values);
        let once = clip_outliers(&s, lo, hi).unwrap();
        let twice = clip_outliers(&once, lo, hi).unwrap();
        prop_assert_eq!(&once, &twice);
        for i in 0..values.len() {
            for j in 0..values.len() {
                if values[i] <= values[j] {
                    prop_assert!(once.value(i, 0, 0) <= once.value(j, 0, 0));
                }
            }
        }
    }
}

#[test]
fn population_z_score() {
    let s = column(&[1.0, 2.0, 3.0]);
    let stats = NormStats::fit(&s).unwrap();
    assert_eq!(stats.mean[0], 2.0);
    assert!((stats.std[0] - 0.816496580927726).abs() < 1e-15);
    let z = normalize(&s, &stats).unwrap();
    assert!((z.value(0, 0, 0) + 1.224744871391589).abs() < 1e-12);
    assert_eq!(z.value(1, 0, 0), 0.0);
    assert!((z.value(2, 0, 0) - 1.224744871391589).abs() < 1e-12);
}

#[test]
fn constant_feature_is_centered() {
    let s = column(&[4.0; 10]);
    let stats = NormStats::fit(&s).unwrap();
    assert!(stats.constant[0]);
    assert_eq!(stats.std[0], 1.0);
    let z = normalize(&s, &stats).unwrap();
    assert!((0..10).all(|t| z.value(t, 0, 0) == 0.0));
}

#[test]
fn training_stats_standardize_training_split() {
    let mut rng = RandomSource::new(5);
    let values: Vec<f64> = (0..200 * 3 * 2).map(|_| 3.0 + 2.0 * rng.normal()).collect();
    let s = AlignedSeries::dense(
        vec!["a".into(), "b".into(), "c".into()],
        vec!["x".into(), "y".into()],
        0,
        values,
    )
    .unwrap();
    let z = normalize(&s, &NormStats::fit(&s).unwrap()).unwrap();
    let again = NormStats::fit(&z).unwrap();
    assert!(again.mean.iter().all(|m| m.abs() < 1e-12));
    assert!(again.std.iter().all(|s| (s - 1.0).abs() < 1e-12));
    let other = column(&[1.0, 2.0]);
    assert!(matches!(normalize(&other, &NormStats::fit(&s).unwrap()), Err(Error::Shape(_))));
}

fn write_file(dir: &std::path::Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
    p
}

fn simple_schema() -> Schema {
    Schema::from_json(r#"{"0": "id", "1": "timestamp", "2": "cpu", "3": "mem"}"#).unwrap()
}

#[test]
fn empty_file_is_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_file(dir.path(), "a.csv", "");
    match ingest_csv(&[p], &simple_schema(), 0.01) {
        Err(Error::Data(m)) => assert_eq!(m, "empty input"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn malformed_lines_within_tolerance_are_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let body = "m1,0,10,20\nm1,60,11,21\nm1,oops,1,2\nm2,0,5,6\nm2,60,7,8\n";
    let p = write_file(dir.path(), "a.csv", body);
    let got = ingest_csv(std::slice::from_ref(&p), &simple_schema(), 0.25).unwrap();
    assert_eq!(got.records.len(), 4);
    assert_eq!(got.skipped, 1);
    assert!(got.first_error.unwrap().contains(":3:"));
    assert!(matches!(ingest_csv(&[p], &simple_schema(), 0.1), Err(Error::Data(_))));
}

#[test]
fn later_duplicate_wins() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_file(dir.path(), "a.csv", "m1,0,1,1\nm1,60,2,2\n");
    let b = write_file(dir.path(), "b.csv", "m1,60,9,9\n");
    let got = ingest_csv(&[b, a], &simple_schema(), 0.0).unwrap();
    assert_eq!(got.duplicates, 1);
    assert_eq!(got.records.len(), 2);
    assert_eq!(got.records[1].values, vec![9.0, 9.0]);
}

#[test]
fn machine_usage_preset_columns() {
    let s = Schema::preset("machine-usage").unwrap();
    assert_eq!(s.metric_names(), vec!["cpu", "mem", "net_in", "net_out", "disk_io"]);
    let dir = tempfile::tempdir().unwrap();
    let p = write_file(dir.path(), "u.csv", "m_1932,386640,41,92,,,43.04,31.21,4\n");
    let got = ingest_csv(&[p], &s, 0.0).unwrap();
    assert_eq!(got.records[0].values, vec![41.0, 92.0, 43.04, 31.21, 4.0]);
    assert!(Schema::preset("job-usage").is_none());
}

fn rec(id: &str, ts: i64, v: f64) -> RawRecord {
    RawRecord {
        id: id.into(),
        timestamp: ts,
        values: vec![v],
    }
}

#[test]
fn align_averages_within_a_bucket() {
    let s = align(&[rec("a", 0, 1.0), rec("a", 30, 3.0)], &["x".into()], 0, 60, 3).unwrap();
    assert_eq!(s.steps(), 1);
    assert_eq!(s.value(0, 0, 0), 2.0);
}

#[test]
fn align_fills_short_gaps_and_masks_long_ones() {
    // Gap of two buckets (1, 2) then a gap of five (4..=8).
    let records = [rec("a", 0, 1.0), rec("a", 180, 2.0), rec("a", 540, 3.0)];
    let s = align(&records, &["x".into()], 0, 60, 3).unwrap();
    assert_eq!(s.steps(), 10);
    assert!(s.is_valid(1, 0) && s.is_valid(2, 0));
    assert_eq!(s.value(2, 0, 0), 1.0);
    assert!((4..9).all(|t| !s.is_valid(t, 0)));
    assert!(s.is_valid(9, 0));
}

#[test]
fn align_rejects_disjoint_nodes() {
    let records = [rec("a", 0, 1.0), rec("a", 60, 1.0), rec("b", 6000, 1.0)];
    assert!(matches!(align(&records, &["x".into()], 0, 60, 3), Err(Error::Data(_))));
}

#[test]
fn synth_is_deterministic() {
    let c = SynthConfig::new(4, 2, 300);
    let a = synth_generate(&c).unwrap();
    let b = synth_generate(&c).unwrap();
    assert_eq!(a.series, b.series);
    let mut d = c.clone();
    d.seed = 1;
    assert_ne!(synth_generate(&d).unwrap().series, a.series);
}

#[test]
fn decoupled_synth_is_noisy_constants() {
    let mut c = SynthConfig::new(3, 1, 4000);
    c.coupling = 0.0;
    c.burst_rate = 0.0;
    c.noise = 0.1;
    let out = synth_generate(&c).unwrap();
    for k in 0..3 {
        let col = out.series.valid_column(k, 0);
        let mean = col[1..].iter().sum::<f64>() / (col.len() - 1) as f64;
        let var = col[1..].iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (col.len() - 1) as f64;
        assert!((mean - out.levels[k]).abs() < 0.01);
        assert!((var.sqrt() - 0.1).abs() < 0.01);
    }
}

#[test]
fn noiseless_synth_matches_recurrence() {
    let mut c = SynthConfig::new(4, 2, 50);
    c.noise = 0.0;
    c.burst_rate = 0.0;
    c.season_amplitude = 0.5;
    let out = synth_generate(&c).unwrap();
    let a = out.adjacency.matrix();
    let mut x: Vec<f64> = out.levels.clone();
    for t in 1..50 {
        let mut next = vec![0.0; 8];
        for i in 0..4 {
            for j in 0..2 {
                let mix: f64 = (0..4).map(|n| a.get(i, n) * x[n * 2 + j]).sum();
                next[i * 2 + j] = 0.6 * mix + 0.4 * out.levels[i * 2 + j] + cloudcast::data::season(&c, t, i, j);
            }
        }
        x = next;
        for i in 0..4 {
            for j in 0..2 {
                assert_eq!(out.series.value(t, i, j), x[i * 2 + j]);
            }
        }
    }
}

fn lag1_corr(a: &[f64], b: &[f64]) -> f64 {
    let x = &a[..a.len() - 1];
    let y = &b[1..];
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(p, q)| (p - mx) * (q - my)).sum();
    let vx: f64 = x.iter().map(|p| (p - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|q| (q - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[test]
fn linked_nodes_lead_their_neighbors() {
    let mut c = SynthConfig::new(6, 1, 5000);
    c.coupling = 0.6;
    c.seed = 2;
    let out = synth_generate(&c).unwrap();
    let a = out.adjacency.matrix();
    let cols: Vec<Vec<f64>> = (0..6).map(|k| out.series.valid_column(k, 0)).collect();
    let (mut linked, mut unlinked) = (Vec::new(), Vec::new());
    for i in 0..6 {
        for j in 0..6 {
            if i != j {
                // Row i mixes node j into node i's next step.
                let r = lag1_corr(&cols[j], &cols[i]);
                if a.get(i, j) > 0.0 { linked.push(r) } else { unlinked.push(r) }
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(!linked.is_empty() && !unlinked.is_empty());
    assert!(mean(&linked) > mean(&unlinked) + 0.05, "{linked:?} vs {unlinked:?}");
}

#[test]
fn drift_changes_the_process_but_not_the_reported_graph() {
    let mut c = SynthConfig::new(5, 1, 200);
    c.density = 0.5;
    let base = synth_generate(&c).unwrap();
    c.drift_times = vec![100];
    c.drift_fraction = 1.0;
    let drifted = synth_generate(&c).unwrap();
    assert_eq!(base.adjacency, drifted.adjacency);
    assert_eq!(base.series.slice(0..100).unwrap(), drifted.series.slice(0..100).unwrap());
    assert_ne!(base.series, drifted.series);
}

#[test]
fn unstable_coupling_is_a_config_error() {
    let mut c = SynthConfig::new(3, 1, 10);
    c.coupling = 1.0;
    assert!(matches!(synth_generate(&c), Err(Error::Config(_))));
}

#[test]
fn series_round_trips_through_disk() {
    let mut c = SynthConfig::new(3, 2, 40);
    c.seed = 9;
    let s = synth_generate(&c).unwrap().series;
    let s = masked(&masked(&s, 5, 1), 6, 1);
    let dir = tempfile::tempdir().unwrap();
    write_series(dir.path(), &s, &series_meta(&s)).unwrap();
    let (back, meta) = read_series(dir.path()).unwrap();
    assert_eq!(back, s);
    assert_eq!(meta.valid_spans[1], vec![(0, 5), (7, 40)]);
}
