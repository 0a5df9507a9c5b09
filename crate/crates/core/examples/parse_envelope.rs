//! Parse an envelope, inspect its events, and write it back out.
//!
//! ```sh
//! cargo run --example parse_envelope -- corpus/listing2.json
//! ```

use ovon::envelope::{parse_envelope, serialize_envelope_pretty, validate_envelope};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/listing2.json").into());
    let env = parse_envelope(&std::fs::read_to_string(&path)?)?;

    println!("conversation {} from {}", env.conversation_id(), env.sender.from);
    if let Some(rc) = &env.response_code {
        println!("responseCode {} {}", rc.code, rc.description.as_deref().unwrap_or(""));
    }
    for e in &env.events {
        let to = e.to.as_deref().unwrap_or("-");
        match e.text() {
            Some(text) => println!("  {:<16} to {to}: {text}", e.event_type.as_str()),
            None => println!("  {:<16} to {to}", e.event_type.as_str()),
        }
    }
    println!("violations: {}", validate_envelope(&env).len());
    println!("{}", serialize_envelope_pretty(&env)?);
    Ok(())
}
