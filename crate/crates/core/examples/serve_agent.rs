//! Serve a specialist over HTTP and talk to it with the HTTP client.
//!
//! Pass `--stay` to keep the service running until Ctrl-C.

use std::sync::Arc;

use ovon::config::{AgentConfig, AgentRole, BuildContext};
use ovon::envelope::{parse_envelope, parse_manifest};
use ovon::transport::{serve, Host, HttpTransport, LoopbackTransport, TranscriptLog, Transport};
use ovon::{Clock, ConversationEnvelope, DialogEvent, EnvelopeEvent};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = AgentConfig::new("smartlibrary", "http://127.0.0.1:8080/", AgentRole::Specialist);
    cfg.manifest = Some(parse_manifest(include_str!("../../../corpus/listing4.json"))?);
    let agent = cfg.build(&BuildContext::new(".", LoopbackTransport::new()))?;
    let log = TranscriptLog::new(None, Clock::System);
    let svc = serve(Arc::new(Host::new(agent, log.clone())), "127.0.0.1:0".parse()?, None).await?;
    println!("listening on {}", svc.url());

    let http = HttpTransport::default();
    let manifest = http
        .send(
            &svc.url(),
            &parse_envelope(include_str!("../../../corpus/listing5.json"))?,
        )
        .await?;
    println!(
        "manifest role: {}",
        manifest.events[0]
            .manifest()
            .map_or("?", |m| m.identification.role.as_str())
    );

    let hello = ConversationEnvelope::new("demo", "http://client.example/").with_event(EnvelopeEvent::utterance(
        DialogEvent::text_from("me", "Hello library"),
        &Clock::System,
    ));
    let reply = http.send(&svc.url(), &hello).await?;
    for e in &reply.events {
        println!("{}: {}", e.event_type.as_str(), e.text().unwrap_or_default());
    }
    println!("{} transcript entries", log.entries().len());

    if std::env::args().any(|a| a == "--stay") {
        tokio::signal::ctrl_c().await?;
    }
    svc.shutdown().await;
    Ok(())
}
