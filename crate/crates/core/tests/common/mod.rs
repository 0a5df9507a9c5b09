#![allow(dead_code)]

use std::path::PathBuf;

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn listing_path(n: usize) -> PathBuf {
    repo_root().join(format!("corpus/listing{n}.json"))
}

pub fn listing(n: usize) -> String {
    std::fs::read_to_string(listing_path(n)).expect("corpus listing present")
}

pub fn scenario_path(name: &str) -> PathBuf {
    repo_root().join(format!("scenarios/{name}.yaml"))
}

use std::sync::Arc;
use std::time::Duration;

use ovon::clock::FROZEN_TIME;
use ovon::config::BuildContext;
use ovon::harness::{load_scenario, run_scenario, RunOptions, ScenarioReport, ScenarioSpec};
use ovon::transport::{Host, LoopbackTransport, TranscriptEntry, TranscriptLog, Transport};
use ovon::{Clock, ConversationEnvelope, DialogEvent, EnvelopeEvent};
use rand::{rngs::StdRng, Rng, SeedableRng};

pub fn scenario(name: &str) -> ScenarioSpec {
    load_scenario(&scenario_path(name)).expect("scenario loads")
}

pub fn frozen_options() -> RunOptions {
    RunOptions {
        base_dir: repo_root().join("scenarios"),
        freeze_time: true,
        ..RunOptions::default()
    }
}

pub async fn run(name: &str) -> ScenarioReport {
    run_scenario(&scenario(name), &frozen_options())
        .await
        .expect("scenario runs")
}

/// Entries as comparable JSON, sequence numbers dropped.
pub fn comparable(entries: &[TranscriptEntry]) -> Vec<serde_json::Value> {
    entries
        .iter()
        .map(|e| {
            let mut v = serde_json::to_value(e).unwrap();
            v.as_object_mut().unwrap().remove("seq");
            v
        })
        .collect()
}

/// A scenario's agents on one loopback transport with a frozen clock.
pub struct Mesh {
    pub loopback: Arc<LoopbackTransport>,
    pub log: Arc<TranscriptLog>,
    pub entry: String,
    urls: Vec<String>,
}

impl Drop for Mesh {
    fn drop(&mut self) {
        for u in &self.urls {
            self.loopback.unregister(u);
        }
    }
}

pub fn mesh(spec: &ScenarioSpec) -> Mesh {
    let clock = Clock::Frozen(FROZEN_TIME.into());
    let loopback = LoopbackTransport::new();
    let log = TranscriptLog::new(None, clock.clone());
    let mut ctx = BuildContext::new(repo_root().join("scenarios"), loopback.clone());
    ctx.clock = clock;
    for a in &spec.agents {
        loopback.register(&a.endpoint, Arc::new(Host::new(a.build(&ctx).unwrap(), log.clone())));
    }
    let entry = spec
        .agents
        .iter()
        .find(|a| a.role == ovon::config::AgentRole::Mediator)
        .unwrap()
        .endpoint
        .clone();
    Mesh {
        loopback,
        log,
        entry,
        urls: spec.agents.iter().map(|a| a.endpoint.clone()).collect(),
    }
}

/// Post `turns` as one human in conversation `id`, pausing by `pause(i)`.
pub async fn converse(mesh: &Mesh, id: &str, human: &str, turns: &[String], pauses: &[u64]) {
    let clock = Clock::Frozen(FROZEN_TIME.into());
    for (i, say) in turns.iter().enumerate() {
        let mut env = ConversationEnvelope::new(id, format!("{human}-proxy"));
        if i == 0 {
            env = env.with_event(EnvelopeEvent::invite(&mesh.entry).addressed_to(&mesh.entry));
        }
        env = env.with_event(EnvelopeEvent::utterance(DialogEvent::text_from(human, say), &clock));
        mesh.loopback.send(&mesh.entry, &env).await.expect("turn delivered");
        for _ in 0..pauses.get(i).copied().unwrap_or(0) {
            tokio::task::yield_now().await;
        }
        if pauses.get(i).is_some_and(|p| p % 3 == 0) {
            tokio::time::sleep(Duration::from_micros(50)).await;
        }
    }
}

pub fn errand_turns() -> Vec<String> {
    scenario("smart_errands").turns.iter().map(|t| t.say.clone()).collect()
}

/// Run two copies of the errands conversation sequentially and interleaved
/// under `seed`; true when each conversation's transcript is unchanged.
pub async fn isolation_trial(seed: u64) -> bool {
    let spec = scenario("smart_errands");
    let turns = errand_turns();

    let sequential = mesh(&spec);
    converse(&sequential, "conv-a", "Emmett", &turns, &[]).await;
    converse(&sequential, "conv-b", "Emmett", &turns, &[]).await;

    let mut rng = StdRng::seed_from_u64(seed);
    let pa: Vec<u64> = (0..turns.len()).map(|_| rng.gen_range(0..8)).collect();
    let pb: Vec<u64> = (0..turns.len()).map(|_| rng.gen_range(0..8)).collect();
    let interleaved = Arc::new(mesh(&spec));
    let (ma, mb) = (interleaved.clone(), interleaved.clone());
    let (ta, tb) = (turns.clone(), turns.clone());
    let a = tokio::spawn(async move { converse(&ma, "conv-a", "Emmett", &ta, &pa).await });
    let b = tokio::spawn(async move { converse(&mb, "conv-b", "Emmett", &tb, &pb).await });
    a.await.unwrap();
    b.await.unwrap();

    ["conv-a", "conv-b"]
        .iter()
        .all(|id| comparable(&sequential.log.conversation(id)) == comparable(&interleaved.log.conversation(id)))
}

pub const REGISTRY: &str = "https://andres.example.ee/";

pub fn synthetic() -> Vec<ovon::AssistantManifest> {
    let raw = std::fs::read_to_string(repo_root().join("scenarios/backends/library_manifests.json")).unwrap();
    let mut all = ovon::envelope::parse_manifest_list(&raw).unwrap();
    all.remove(0);
    all
}

pub fn andres(manifests: Vec<ovon::AssistantManifest>) -> ovon::registry::Registry {
    let mut own = ovon::envelope::parse_manifest(&listing(4)).unwrap();
    own.identification.service_endpoint = REGISTRY.into();
    own.identification.conversational_name = "Andres".into();
    own.capabilities[0].keywords = vec!["discovery".into()];
    own.capabilities[0].descriptive_texts = vec!["Assistant registry".into()];
    let r = ovon::registry::Registry::new(REGISTRY, own).unwrap().with_scores(true);
    for m in manifests {
        r.register_manifest(m).unwrap();
    }
    r
}

/// Listing 4 with the endpoint it is published under in Listing 6.
pub fn smartlibrary() -> ovon::AssistantManifest {
    let mut m = ovon::envelope::parse_manifest(&listing(4)).unwrap();
    m.identification.service_endpoint = "https://your-smartlibrary-url-here/smartlibrary".into();
    m
}

pub fn fixture_registry() -> ovon::registry::Registry {
    let mut all = vec![smartlibrary()];
    all.extend(synthetic());
    andres(all)
}

/// `n` registries that only know the next one in a ring.
pub fn referral_ring(n: usize) -> (Arc<LoopbackTransport>, Vec<String>) {
    let loopback = LoopbackTransport::new();
    let log = TranscriptLog::new(None, Clock::System);
    let urls: Vec<String> = (0..n).map(|i| format!("https://registry{i}.example/")).collect();
    for (i, url) in urls.iter().enumerate() {
        let mut own = ovon::envelope::parse_manifest(&listing(4)).unwrap();
        own.identification.service_endpoint = url.clone();
        own.identification.conversational_name = format!("registry{i}");
        own.capabilities[0].keywords = vec!["discovery".into()];
        own.capabilities[0].descriptive_texts = vec![];
        let next = &urls[(i + 1) % n];
        let reg = ovon::registry::Registry::new(url, own)
            .unwrap()
            .with_peers([ovon::registry::PeerRegistry {
                name: format!("registry{}", (i + 1) % n),
                url: next.clone(),
            }]);
        let agent = ovon::runtime::RegistryAgent::new(format!("registry{i}"), Arc::new(reg), Clock::System);
        loopback.register(url, Arc::new(Host::new(Arc::new(agent), log.clone())));
    }
    (loopback, urls)
}

use ovon::fsm::{FsmAction, FsmInput, ServingState};

/// Serving transitions written out by hand from the protocol description.
pub const SERVING_TABLE: &[(ServingState, FsmInput, ServingState, FsmAction)] = &[
    (
        ServingState::Idle,
        FsmInput::ReceivedInvite,
        ServingState::Ready,
        FsmAction::None,
    ),
    (
        ServingState::Ready,
        FsmInput::ReceivedUtterance,
        ServingState::SearchingForResponse,
        FsmAction::StartLookup,
    ),
    (
        ServingState::Ready,
        FsmInput::ReceivedWhisper,
        ServingState::SearchingForResponse,
        FsmAction::StartLookup,
    ),
    (
        ServingState::SearchingForResponse,
        FsmInput::LookupSucceeded,
        ServingState::SendingResponse,
        FsmAction::EmitResponseEnvelope,
    ),
    (
        ServingState::SearchingForResponse,
        FsmInput::LookupFailed,
        ServingState::Idle,
        FsmAction::EmitBye,
    ),
    (
        ServingState::SendingResponse,
        FsmInput::SentUtteranceOrWhisper,
        ServingState::Ready,
        FsmAction::None,
    ),
    (
        ServingState::Ready,
        FsmInput::InactivityTimeout,
        ServingState::Idle,
        FsmAction::None,
    ),
    (
        ServingState::Ready,
        FsmInput::ReceivedBye,
        ServingState::Idle,
        FsmAction::None,
    ),
];
