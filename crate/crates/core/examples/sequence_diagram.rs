//! PlantUML from a transcript file, or from a fresh Smart Library run when
//! no file is given.
//!
//! ```sh
//! cargo run --example sequence_diagram -- transcripts/smart_library-lea.jsonl > library.puml
//! ```

use std::path::PathBuf;

use ovon::harness::{export_sequence_diagram, load_scenario, run_scenario, RunOptions};
use ovon::transport::read_transcript;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let entries = match std::env::args().nth(1) {
        Some(path) => read_transcript(path.as_ref())?,
        None => {
            let dir = PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios"));
            let spec = load_scenario(&dir.join("smart_library.yaml"))?;
            let opts = RunOptions {
                base_dir: dir,
                freeze_time: true,
                ..RunOptions::default()
            };
            run_scenario(&spec, &opts).await?.transcript
        }
    };
    print!("{}", export_sequence_diagram(&entries));
    Ok(())
}
