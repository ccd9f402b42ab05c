//! On-disk form of an [`AlignedSeries`]: `series.csv` with one row per
//! `(step, node)` plus a `series.json` sidecar.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AlignedSeries, NormStats};
use crate::artifact::{read_json, write_atomic, write_json};
use crate::error::{Error, Result};

pub const SERIES_CSV: &str = "series.csv";
pub const SERIES_META: &str = "series.json";
pub const TOPOLOGY_FILE: &str = "topology.json";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesMeta {
    pub format_version: u32,
    pub start: i64,
    pub bucket_seconds: i64,
    pub steps: usize,
    pub node_ids: Vec<String>,
    pub feature_names: Vec<String>,
    pub target_feature: usize,
    /// Per node, half-open `[start, end)` runs of valid steps.
    pub valid_spans: Vec<Vec<(usize, usize)>>,
    #[serde(default)]
    pub stats: Option<NormStats>,
    /// Whatever produced the series (synth config, ingest settings).
    #[serde(default)]
    pub source: Option<serde_json::Value>,
    #[serde(default)]
    pub source_hash: Option<String>,
}

fn node_spans(series: &AlignedSeries, node: usize) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut begin = None;
    for t in 0..series.steps() {
        match (series.is_valid(t, node), begin) {
            (true, None) => begin = Some(t),
            (false, Some(b)) => {
                spans.push((b, t));
                begin = None;
            }
            _ => {}
        }
    }
    if let Some(b) = begin {
        spans.push((b, series.steps()));
    }
    spans
}

pub fn series_meta(series: &AlignedSeries) -> SeriesMeta {
    SeriesMeta {
        format_version: FORMAT_VERSION,
        start: series.start,
        bucket_seconds: series.bucket_seconds,
        steps: series.steps(),
        node_ids: series.node_ids.clone(),
        feature_names: series.feature_names.clone(),
        target_feature: series.target_feature,
        valid_spans: (0..series.nodes()).map(|k| node_spans(series, k)).collect(),
        stats: None,
        source: None,
        source_hash: None,
    }
}

pub fn series_csv(series: &AlignedSeries) -> String {
    let mut out = String::from("step,timestamp,node");
    for name in &series.feature_names {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for t in 0..series.steps() {
        for k in 0..series.nodes() {
            let _ = write!(out, "{t},{},{}", series.timestamp(t), series.node_ids[k]);
            for f in 0..series.features() {
                out.push(',');
                if series.is_valid(t, k) {
                    let _ = write!(out, "{}", series.value(t, k, f));
                }
            }
            out.push('\n');
        }
    }
    out
}

/// Write `series.csv` and `series.json` into `dir`.
pub fn write_series(dir: &Path, series: &AlignedSeries, meta: &SeriesMeta) -> Result<()> {
    write_atomic(&dir.join(SERIES_CSV), series_csv(series).as_bytes())?;
    write_json(&dir.join(SERIES_META), meta)
}

pub fn read_series(dir: &Path) -> Result<(AlignedSeries, SeriesMeta)> {
    let meta_path = dir.join(SERIES_META);
    let meta: SeriesMeta = read_json(&meta_path)?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::Data(format!(
            "{}: unsupported format version {}",
            meta_path.display(),
            meta.format_version
        )));
    }
    let csv_path = dir.join(SERIES_CSV);
    let (k, f) = (meta.node_ids.len(), meta.feature_names.len());
    let mut values = vec![f64::NAN; meta.steps * k * f];
    let mut mask = vec![false; meta.steps * k];
    let mut reader = csv::Reader::from_path(&csv_path).map_err(|e| csv_err(&csv_path, e))?;
    let mut rows = 0;
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(&csv_path, e))?;
        let at = || format!("{}:{}", csv_path.display(), line + 2);
        if rec.len() != 3 + f {
            return Err(Error::Data(format!("{}: expected {} fields", at(), 3 + f)));
        }
        let t: usize = rec[0].parse().map_err(|_| Error::Data(format!("{}: bad step", at())))?;
        let node = meta
            .node_ids
            .iter()
            .position(|id| id == &rec[2])
            .ok_or_else(|| Error::Data(format!("{}: unknown node {:?}", at(), &rec[2])))?;
        if t >= meta.steps {
            return Err(Error::Data(format!("{}: step {t} out of range", at())));
        }
        let empty = (0..f).all(|j| rec[3 + j].is_empty());
        if !empty {
            for j in 0..f {
                let v: f64 = rec[3 + j]
                    .parse()
                    .map_err(|_| Error::Data(format!("{}: bad value {:?}", at(), &rec[3 + j])))?;
                values[(t * k + node) * f + j] = v;
            }
            mask[t * k + node] = true;
        }
        rows += 1;
    }
    if rows != meta.steps * k {
        return Err(Error::Data(format!(
            "{}: {rows} rows, expected {}",
            csv_path.display(),
            meta.steps * k
        )));
    }
    let series = AlignedSeries::new(
        meta.start,
        meta.bucket_seconds,
        meta.node_ids.clone(),
        meta.feature_names.clone(),
        meta.target_feature,
        values,
        mask,
    )?;
    Ok((series, meta))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Data(format!("{}: {other:?}", path.display())),
    }
}
