//! Headerless CSV ingestion of per-node usage samples.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 0.01;

/// Which CSV column holds the node id, the timestamp and each metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub id: usize,
    pub timestamp: usize,
    /// `(column, metric name)` in output feature order.
    pub metrics: Vec<(usize, String)>,
}

impl Schema {
    /// Built-in presets. `machine-usage` follows the Alibaba 2018
    /// `machine_usage` table: id, timestamp, cpu %, mem %, two unused
    /// columns, net-in, net-out, disk-io %.
    pub fn preset(name: &str) -> Option<Schema> {
        match name {
            "machine-usage" => Some(Schema {
                id: 0,
                timestamp: 1,
                metrics: vec![
                    (2, "cpu".into()),
                    (3, "mem".into()),
                    (6, "net_in".into()),
                    (7, "net_out".into()),
                    (8, "disk_io".into()),
                ],
            }),
            _ => None,
        }
    }

    /// Parse the `{"column index": "role"}` form, where role is `id`,
    /// `timestamp` or a metric name. Metrics are ordered by column.
    pub fn from_json(text: &str) -> Result<Schema> {
        let map: BTreeMap<String, String> =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("schema: {e}")))?;
        let mut id = None;
        let mut timestamp = None;
        let mut metrics = Vec::new();
        for (col, role) in map {
            let col: usize = col
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("schema key {col:?} is not a column index")))?;
            match role.as_str() {
                "id" => id = Some(col),
                "timestamp" => timestamp = Some(col),
                _ => metrics.push((col, role)),
            }
        }
        metrics.sort();
        let schema = Schema {
            id: id.ok_or_else(|| Error::Config("schema has no id column".into()))?,
            timestamp: timestamp.ok_or_else(|| Error::Config("schema has no timestamp column".into()))?,
            metrics,
        };
        if schema.metrics.is_empty() {
            return Err(Error::Config("schema has no metric columns".into()));
        }
        Ok(schema)
    }

    pub fn metric_names(&self) -> Vec<String> {
        self.metrics.iter().map(|(_, n)| n.clone()).collect()
    }

    fn width(&self) -> usize {
        self.metrics
            .iter()
            .map(|(c, _)| *c)
            .chain([self.id, self.timestamp])
            .max()
            .unwrap_or(0)
            + 1
    }
}

/// One parsed sample. Empty metric fields are `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub id: String,
    pub timestamp: i64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ingested {
    /// Sorted by `(id, timestamp)`, one record per key.
    pub records: Vec<RawRecord>,
    pub metric_names: Vec<String>,
    pub lines: usize,
    pub skipped: usize,
    pub duplicates: usize,
    /// First malformed line as `path:line: reason`, if any.
    pub first_error: Option<String>,
}

struct FileResult {
    records: Vec<RawRecord>,
    lines: usize,
    skipped: usize,
    first_error: Option<String>,
}

fn parse_line(fields: &csv::StringRecord, schema: &Schema, width: usize) -> std::result::Result<RawRecord, String> {
    if fields.len() < width {
        return Err(format!("expected at least {width} fields, found {}", fields.len()));
    }
    let id = fields[schema.id].trim();
    if id.is_empty() {
        return Err("empty id".into());
    }
    let ts = fields[schema.timestamp].trim();
    let timestamp = ts
        .parse::<i64>()
        .ok()
        .or_else(|| ts.parse::<f64>().ok().filter(|v| v.is_finite()).map(|v| v.floor() as i64))
        .ok_or_else(|| format!("bad timestamp {ts:?}"))?;
    let mut values = Vec::with_capacity(schema.metrics.len());
    for (col, name) in &schema.metrics {
        let raw = fields[*col].trim();
        if raw.is_empty() {
            values.push(f64::NAN);
            continue;
        }
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            _ => return Err(format!("bad {name} value {raw:?}")),
        }
    }
    Ok(RawRecord {
        id: id.to_string(),
        timestamp,
        values,
    })
}

fn parse_file(path: &Path, schema: &Schema) -> Result<FileResult> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_io(path, e))?;
    let width = schema.width();
    let mut out = FileResult {
        records: Vec::new(),
        lines: 0,
        skipped: 0,
        first_error: None,
    };
    let mut row = csv::StringRecord::new();
    loop {
        let line = out.lines + 1;
        let parsed = match reader.read_record(&mut row) {
            Ok(false) => break,
            Ok(true) => parse_line(&row, schema, width),
            Err(e) if e.is_io_error() => return Err(csv_io(path, e)),
            Err(e) => Err(e.to_string()),
        };
        out.lines += 1;
        match parsed {
            Ok(r) => out.records.push(r),
            Err(reason) => {
                out.skipped += 1;
                out.first_error
                    .get_or_insert_with(|| format!("{}:{line}: {reason}", path.display()));
            }
        }
    }
    Ok(out)
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Data(format!("{}: {other:?}", path.display())),
    }
}

/// Expand directories into their regular files, sorted by path.
pub fn collect_inputs(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let entries = std::fs::read_dir(p).map_err(|e| Error::io(p, e))?;
            for entry in entries {
                let entry = entry.map_err(|e| Error::io(p, e))?;
                if entry.path().is_file() {
                    files.push(entry.path());
                }
            }
        } else {
            files.push(p.clone());
        }
    }
    files.sort();
    Ok(files)
}

/// Parse every file (concurrently), merge, sort by `(id, timestamp)` and
/// resolve duplicate keys in favor of the later row in file order.
/// Malformed lines are skipped while their share of all lines stays within
/// `tolerance`.
pub fn ingest_csv(paths: &[PathBuf], schema: &Schema, tolerance: f64) -> Result<Ingested> {
    if !(0.0..=1.0).contains(&tolerance) {
        return Err(Error::Config(format!("tolerance {tolerance} outside [0, 1]")));
    }
    let files = collect_inputs(paths)?;
    let parsed: Vec<FileResult> = files
        .par_iter()
        .map(|p| parse_file(p, schema))
        .collect::<Result<_>>()?;

    let mut out = Ingested {
        metric_names: schema.metric_names(),
        ..Ingested::default()
    };
    let mut records = Vec::new();
    for r in parsed {
        out.lines += r.lines;
        out.skipped += r.skipped;
        if out.first_error.is_none() {
            out.first_error = r.first_error;
        }
        records.extend(r.records);
    }
    if out.lines == 0 {
        return Err(Error::Data("empty input".into()));
    }
    if out.skipped as f64 > tolerance * out.lines as f64 {
        return Err(Error::Data(format!(
            "{} of {} lines malformed (tolerance {tolerance}); first: {}",
            out.skipped,
            out.lines,
            out.first_error.as_deref().unwrap_or("?")
        )));
    }
    if records.is_empty() {
        return Err(Error::Data("empty input".into()));
    }
    // Stable sort keeps file order within a key, so the last entry wins.
    records.sort_by(|a, b| (&a.id, a.timestamp).cmp(&(&b.id, b.timestamp)));
    let mut deduped: Vec<RawRecord> = Vec::with_capacity(records.len());
    for r in records {
        match deduped.last_mut() {
            Some(prev) if prev.id == r.id && prev.timestamp == r.timestamp => {
                *prev = r;
                out.duplicates += 1;
            }
            _ => deduped.push(r),
        }
    }
    out.records = deduped;
    Ok(out)
}
