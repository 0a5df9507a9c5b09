//! Replay Smart Errands and list Cassandra's delegation segments.

use std::path::PathBuf;

use ovon::harness::{arrows, load_scenario, run_scenario, segments, RunOptions};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios"));
    let spec = load_scenario(&dir.join("smart_errands.yaml"))?;
    let opts = RunOptions {
        base_dir: dir,
        freeze_time: true,
        ..RunOptions::default()
    };
    let report = run_scenario(&spec, &opts).await?;
    let a = arrows(&report.transcript);
    for s in segments(&a, "Cassandra", &["Emmett".to_string()]) {
        let close = s.close.map_or("open".to_string(), |c| format!("line {}", a[c].line));
        println!("{:<8} line {} .. {close}", s.delegate, a[s.open].line);
    }
    for r in &report.results {
        println!("{}  {}", if r.passed { "pass" } else { "FAIL" }, r.description);
    }
    println!(
        "{} of {} passed",
        report.results.len() - report.failures(),
        report.results.len()
    );
    Ok(())
}
