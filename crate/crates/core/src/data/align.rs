use super::{AlignedSeries, RawRecord};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_GAP: usize = 3;

/// Bucket sorted records onto a global step grid.
///
/// Each `(node, bucket)` takes the mean of its finite samples per feature and
/// counts as observed only when every feature has one. Runs of unobserved
/// buckets up to `max_gap` long are forward-filled from the last observation;
/// longer runs, and everything before a node's first observation, are masked.
pub fn align(
    records: &[RawRecord],
    feature_names: &[String],
    target_feature: usize,
    bucket_seconds: i64,
    max_gap: usize,
) -> Result<AlignedSeries> {
    if bucket_seconds <= 0 {
        return Err(Error::Config(format!("bucket width {bucket_seconds} must be positive")));
    }
    if records.is_empty() {
        return Err(Error::Data("empty input".into()));
    }
    let f = feature_names.len();
    if records.iter().any(|r| r.values.len() != f) {
        return Err(Error::Data("record width does not match feature count".into()));
    }
    let bucket = |ts: i64| ts.div_euclid(bucket_seconds);
    let first = records.iter().map(|r| bucket(r.timestamp)).min().unwrap();
    let last = records.iter().map(|r| bucket(r.timestamp)).max().unwrap();
    let steps = usize::try_from(last - first + 1)
        .map_err(|_| Error::Data("timestamp range too large".into()))?;

    let mut node_ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    node_ids.sort();
    node_ids.dedup();
    let k = node_ids.len();

    // sums and counts per (step, node, feature)
    let mut sums = vec![0.0; steps * k * f];
    let mut counts = vec![0u32; steps * k * f];
    for r in records {
        let node = node_ids.binary_search(&r.id).expect("id collected above");
        let t = (bucket(r.timestamp) - first) as usize;
        for (j, v) in r.values.iter().enumerate() {
            if v.is_finite() {
                let i = (t * k + node) * f + j;
                sums[i] += v;
                counts[i] += 1;
            }
        }
    }

    let mut values = vec![f64::NAN; steps * k * f];
    let mut mask = vec![false; steps * k];
    let mut ranges = Vec::with_capacity(k);
    for node in 0..k {
        let observed = |t: usize| (0..f).all(|j| counts[(t * k + node) * f + j] > 0);
        let mut last_seen: Option<usize> = None;
        let mut first_seen = None;
        for t in 0..steps {
            if observed(t) {
                let base = (t * k + node) * f;
                for j in 0..f {
                    values[base + j] = sums[base + j] / counts[base + j] as f64;
                }
                mask[t * k + node] = true;
                if let Some(prev) = last_seen {
                    let gap = t - prev - 1;
                    if gap > 0 && gap <= max_gap {
                        for g in prev + 1..t {
                            fill(&mut values, &mut mask, prev, g, node, k, f);
                        }
                    }
                }
                first_seen.get_or_insert(t);
                last_seen = Some(t);
            }
        }
        let Some(end) = last_seen else {
            return Err(Error::Data(format!("node {:?} has no complete samples", node_ids[node])));
        };
        let trailing = steps - end - 1;
        if trailing > 0 && trailing <= max_gap {
            for g in end + 1..steps {
                fill(&mut values, &mut mask, end, g, node, k, f);
            }
        }
        ranges.push((first_seen.unwrap(), end));
    }
    let lo = ranges.iter().map(|r| r.0).max().unwrap();
    let hi = ranges.iter().map(|r| r.1).min().unwrap();
    if lo > hi {
        return Err(Error::Data("node time ranges do not overlap".into()));
    }
    AlignedSeries::new(
        first * bucket_seconds,
        bucket_seconds,
        node_ids,
        feature_names.to_vec(),
        target_feature,
        values,
        mask,
    )
}

fn fill(values: &mut [f64], mask: &mut [bool], from: usize, to: usize, node: usize, k: usize, f: usize) {
    let src = (from * k + node) * f;
    let dst = (to * k + node) * f;
    values.copy_within(src..src + f, dst);
    mask[to * k + node] = true;
}
