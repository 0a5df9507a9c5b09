//! A registry with three manifests: ranking a query, then the same search
//! over the wire with a `findAssistant` / `requestManifest` exchange.

use std::sync::Arc;

use ovon::envelope::{parse_manifest, parse_manifest_list};
use ovon::registry::{MatchQuery, Registry};
use ovon::runtime::{DiscoveryClient, DiscoveryPolicy, EchoBackend, RegistryAgent, Specialist, SpecialistOptions};
use ovon::transport::{Host, LoopbackTransport, TranscriptLog};
use ovon::Clock;

const ANDRES: &str = "https://andres.example.ee/";

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let manifests = parse_manifest_list(include_str!("../../../scenarios/backends/library_manifests.json"))?;
    let mut own = parse_manifest(include_str!("../../../corpus/listing4.json"))?;
    own.identification.service_endpoint = ANDRES.into();
    own.identification.conversational_name = "Andres".into();
    own.capabilities[0].keywords = vec!["discovery".into()];
    own.capabilities[0].descriptive_texts = vec!["Assistant registry".into()];
    let registry = Registry::new(ANDRES, own)?.with_scores(true);
    for m in &manifests {
        registry.register_manifest(m.clone())?;
    }

    let query = "I need to prepare a Literature essay. Any books written by Lydia Koidula?";
    for c in registry.find(&MatchQuery::new(query)) {
        println!("{:<14} {:>2}  {}", c.conversational_name, c.score.unwrap_or(0), c.url);
    }

    let loopback = LoopbackTransport::new();
    let log = TranscriptLog::new(None, Clock::System);
    let agent = RegistryAgent::new("Andres", Arc::new(registry), Clock::System);
    loopback.register(ANDRES, Arc::new(Host::new(Arc::new(agent), log.clone())));
    let kaja = &manifests[0];
    let mut opts = SpecialistOptions::new("Kaja", kaja.endpoint());
    opts.manifest = Some(kaja.clone());
    let specialist = Specialist::new(opts, Box::new(EchoBackend));
    loopback.register(kaja.endpoint(), Arc::new(Host::new(Arc::new(specialist), log.clone())));

    let mut client = DiscoveryClient::new(
        loopback.as_ref(),
        "https://juri.example.ee/",
        "demo",
        DiscoveryPolicy::default(),
    );
    let found = client.find_assistants(ANDRES, query).await?;
    let manifest = client.request_manifest(&found[0].url).await?;
    println!("picked {} ({})", manifest.name(), manifest.identification.role);
    for step in &client.trace {
        println!("  {}", step.trace_line("demo"));
    }
    for url in [ANDRES, kaja.endpoint()] {
        loopback.unregister(url);
    }
    Ok(())
}
