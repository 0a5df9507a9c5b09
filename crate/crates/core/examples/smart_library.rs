//! Replay the Smart Library conversation: Juri finds Kaja through Andres and
//! relays her answer to Lea.

use std::path::PathBuf;

use ovon::harness::{load_scenario, run_scenario, RunOptions};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios"));
    let spec = load_scenario(&dir.join("smart_library.yaml"))?;
    let opts = RunOptions {
        base_dir: dir,
        freeze_time: true,
        ..RunOptions::default()
    };
    let report = run_scenario(&spec, &opts).await?;
    for a in ovon::harness::arrows(&report.transcript) {
        let text = a.text.map(|t| format!(": {t}")).unwrap_or_default();
        println!("{:>3} {} -> {} {}{text}", a.line, a.from, a.to, a.event_type);
    }
    for r in &report.results {
        println!("{}  {}", if r.passed { "pass" } else { "FAIL" }, r.description);
    }
    Ok(())
}
