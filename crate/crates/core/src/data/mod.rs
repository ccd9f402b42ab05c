//! Ingestion, alignment, cleaning, windowing and synthetic generation of
//! per-node telemetry.

mod align;
mod clean;
mod ingest;
pub mod io;
mod series;
mod synth;
mod window;

pub use align::{align, DEFAULT_MAX_GAP};
pub use clean::{clip_outliers, normalize, NormStats, CONSTANT_STD, DEFAULT_P_HIGH, DEFAULT_P_LOW};
pub use ingest::{collect_inputs, ingest_csv, Ingested, RawRecord, Schema, DEFAULT_TOLERANCE};
pub use series::AlignedSeries;
pub use synth::{season, synth_generate, SynthConfig, SynthOutput};
pub use window::{split, window, WindowBatch};
