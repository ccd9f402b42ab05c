//! Ingest headerless machine-usage CSV rows and align them on a minute grid.

use std::io::Write;

use cloudcast::data::{align, ingest_csv, Schema, DEFAULT_MAX_GAP};

fn main() -> cloudcast::Result<()> {
    let dir = tempfile::tempdir().map_err(|e| cloudcast::Error::io(".", e))?;
    let path = dir.path().join("machine_usage.csv");
    let mut file = std::fs::File::create(&path).map_err(|e| cloudcast::Error::io(&path, e))?;
    for machine in ["m_1", "m_2", "m_3"] {
        for i in 0..40 {
            // A missing stretch on m_2 shows up as masked steps.
            if machine == "m_2" && (15..35).contains(&i) {
                continue;
            }
            let ts = 3600 + i * 20;
            let cpu = 30 + (i * 7) % 23;
            writeln!(file, "{machine},{ts},{cpu},61,,,12.5,9.75,3").unwrap();
        }
    }
    writeln!(file, "m_1,not-a-time,1,2,,,3,4,5").unwrap();
    drop(file);

    let schema = Schema::preset("machine-usage").expect("preset exists");
    let ingested = ingest_csv(&[path], &schema, 0.05)?;
    println!(
        "{} records, {} skipped ({:?})",
        ingested.records.len(),
        ingested.skipped,
        ingested.first_error
    );

    let series = align(&ingested.records, &ingested.metric_names, 0, 60, DEFAULT_MAX_GAP)?;
    println!("{} steps x {} nodes x {} features", series.steps(), series.nodes(), series.features());
    for node in 0..series.nodes() {
        let masked = (0..series.steps()).filter(|&t| !series.is_valid(t, node)).count();
        println!("  {}: {masked} masked steps", series.node_ids[node]);
    }
    Ok(())
}
