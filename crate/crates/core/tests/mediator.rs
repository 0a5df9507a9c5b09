use std::sync::Arc;

use ovon::config::{AgentConfig, AgentRole, BuildContext};
use ovon::fsm::ServingState;
use ovon::runtime::{
    Agent, BackendSpec, Directive, Floor, Mediator, MediatorOptions, RelayMode, Route, Rule, RuleBackend, RuleSet,
    ScriptTurn,
};
use ovon::transport::{Direction, Host, LoopbackTransport, TranscriptLog};
use ovon::{Clock, ConversationEnvelope, DialogEvent, EnvelopeEvent, EventType};

const FLORIST: &str = "https://florist.example/";
const NOWHERE: &str = "https://nowhere.example/";
const ME: &str = "https://mediator.example/";

struct Mesh {
    mediator: Arc<Mediator>,
    log: Arc<TranscriptLog>,
    loopback: Arc<LoopbackTransport>,
}

impl Drop for Mesh {
    fn drop(&mut self) {
        self.loopback.unregister(FLORIST);
    }
}

fn florist_script() -> Vec<ScriptTurn> {
    vec![
        ScriptTurn {
            expect: Some("flowers".into()),
            reply: "Roses are $5 a stem.".into(),
            then: None,
        },
        ScriptTurn {
            expect: None,
            reply: "A dozen red roses, ordered.".into(),
            then: Some(Directive::Bye),
        },
    ]
}

fn mesh(route_to: &str, relay: RelayMode) -> Mesh {
    let loopback = LoopbackTransport::new();
    let log = TranscriptLog::new(None, Clock::System);
    let mut florist = AgentConfig::new("Flo", FLORIST, AgentRole::Specialist);
    florist.backend = BackendSpec::Scripted {
        scripted: florist_script(),
    };
    let agent = florist.build(&BuildContext::new(".", loopback.clone())).unwrap();
    loopback.register(FLORIST, Arc::new(Host::new(agent, log.clone())));

    let mut opts = MediatorOptions::new("Cass", ME);
    opts.greeting = "Anything else?".into();
    opts.routes = vec![Route {
        keywords: vec!["flowers".into()],
        url: route_to.into(),
        name: Some("Flo".into()),
    }];
    opts.relay = relay;
    let rules = RuleSet {
        rules: vec![Rule {
            keywords: vec!["flowers".into()],
            reply: "Let me get the florist.".into(),
            then: Some(Directive::Delegate("flowers".into())),
        }],
        fallback: Some("I can help with flowers.".into()),
    };
    let mediator = Arc::new(Mediator::new(opts, Box::new(RuleBackend::new(rules)), loopback.clone()));
    Mesh {
        mediator,
        log,
        loopback,
    }
}

fn say(text: &str) -> ConversationEnvelope {
    ConversationEnvelope::new("conv", "https://user.example/").with_event(EnvelopeEvent::utterance(
        DialogEvent::text_from("emmett", text),
        &Clock::System,
    ))
}

fn texts(env: &ConversationEnvelope) -> Vec<String> {
    env.events_of(EventType::Utterance).filter_map(|e| e.text()).collect()
}

fn kinds(env: &ConversationEnvelope) -> Vec<EventType> {
    env.events.iter().map(|e| e.event_type).collect()
}

#[tokio::test]
async fn delegation_opens_relays_and_closes() {
    let m = mesh(FLORIST, RelayMode::Passthrough);
    let r1 = m.mediator.handle(say("I need flowers for Mom")).await;
    assert_eq!(
        kinds(&r1),
        [EventType::Utterance, EventType::Invite, EventType::Utterance]
    );
    assert_eq!(texts(&r1), ["Let me get the florist.", "Roses are $5 a stem."]);
    assert!(r1.response_code.as_ref().unwrap().is_success());
    let s = m.mediator.session("conv").await;
    assert_eq!(s.floor, Floor::Delegate(FLORIST.into()));
    assert_eq!(s.delegate_stack.len(), 1);

    let r2 = m.mediator.handle(say("a dozen red ones")).await;
    assert_eq!(texts(&r2), ["A dozen red roses, ordered.", "Anything else?"]);
    assert!(r2.has_event(EventType::Bye));
    let s = m.mediator.session("conv").await;
    assert_eq!(s.floor, Floor::SelfHeld);
    assert!(s.delegate_stack.is_empty());

    let r3 = m.mediator.handle(say("thanks")).await;
    assert_eq!(texts(&r3), ["I can help with flowers."]);
}

#[tokio::test]
async fn passthrough_relays_delegate_dialog_events_verbatim() {
    let m = mesh(FLORIST, RelayMode::Passthrough);
    let r1 = m.mediator.handle(say("flowers please")).await;
    let sent_by_florist: Vec<serde_json::Value> = m
        .log
        .entries()
        .into_iter()
        .filter(|e| e.direction == Direction::Out)
        .flat_map(|e| e.envelope["ovon"]["events"].as_array().cloned().unwrap())
        .filter(|e| e["eventType"] == "utterance")
        .map(|e| e["parameters"]["dialogEvent"].clone())
        .collect();
    let relayed: Vec<serde_json::Value> = r1
        .events
        .iter()
        .filter(|e| e.event_type == EventType::Utterance)
        .skip(1)
        .map(|e| serde_json::to_value(e.dialog().unwrap()).unwrap())
        .collect();
    assert_eq!(relayed, sent_by_florist);
    assert_eq!(relayed[0]["speakerId"], "Flo");
}

#[tokio::test]
async fn revoice_speaks_with_the_mediators_voice() {
    let m = mesh(
        FLORIST,
        RelayMode::Revoice {
            prefix: "Flo says: ".into(),
        },
    );
    let r1 = m.mediator.handle(say("flowers please")).await;
    let last = r1.events.last().unwrap();
    assert_eq!(last.text().as_deref(), Some("Flo says: Roses are $5 a stem."));
    assert_eq!(last.dialog().unwrap().speaker_id, "Cass");
}

#[tokio::test]
async fn unreachable_delegate_gets_an_apology_and_the_floor_stays() {
    let m = mesh(NOWHERE, RelayMode::Passthrough);
    let r = m.mediator.handle(say("flowers please")).await;
    let t = texts(&r);
    assert_eq!(t.last().unwrap(), &MediatorOptions::new("x", "y").apology);
    assert!(!r.has_event(EventType::Invite));
    let s = m.mediator.session("conv").await;
    assert_eq!(s.floor, Floor::SelfHeld);
    assert!(s.delegate_stack.is_empty());
    assert_eq!(s.serving, ServingState::Ready);
}

#[tokio::test]
async fn delegate_disappearing_mid_conversation_returns_the_floor() {
    let m = mesh(FLORIST, RelayMode::Passthrough);
    m.mediator.handle(say("flowers please")).await;
    m.loopback.unregister(FLORIST);
    let r = m.mediator.handle(say("red ones")).await;
    assert_eq!(texts(&r), [MediatorOptions::new("x", "y").apology]);
    assert_eq!(m.mediator.session("conv").await.floor, Floor::SelfHeld);
}

#[tokio::test]
async fn user_bye_is_passed_to_the_delegate_and_answered() {
    let m = mesh(FLORIST, RelayMode::Passthrough);
    m.mediator.handle(say("flowers please")).await;
    let bye =
        ConversationEnvelope::new("conv", "https://user.example/").with_event(EnvelopeEvent::bye(None, &Clock::System));
    let r = m.mediator.handle(bye).await;
    assert_eq!(kinds(&r), [EventType::Bye]);

    let florist_in: Vec<_> = m
        .log
        .entries()
        .into_iter()
        .filter(|e| e.direction == Direction::In)
        .collect();
    let last = florist_in.last().unwrap();
    assert_eq!(last.envelope["ovon"]["events"][0]["eventType"], "bye");
    let florist_out = m
        .log
        .entries()
        .into_iter()
        .rfind(|e| e.direction == Direction::Out)
        .unwrap();
    assert_eq!(florist_out.envelope["ovon"]["events"][0]["eventType"], "bye");
    assert_eq!(m.mediator.session("conv").await.floor, Floor::SelfHeld);
}

#[tokio::test]
async fn invite_alone_is_greeted() {
    let m = mesh(FLORIST, RelayMode::Passthrough);
    let env = ConversationEnvelope::new("c2", "https://user.example/").with_event(EnvelopeEvent::invite(ME));
    let r = m.mediator.handle(env).await;
    assert_eq!(texts(&r), ["Anything else?"]);
    assert_eq!(m.mediator.session("c2").await.serving, ServingState::Ready);
}

#[tokio::test]
async fn empty_envelope_gets_400() {
    let m = mesh(FLORIST, RelayMode::Passthrough);
    let r = m
        .mediator
        .handle(ConversationEnvelope::new("c3", "https://user.example/"))
        .await;
    assert_eq!(r.response_code.unwrap().code, 400);
}

#[tokio::test]
async fn conversations_do_not_share_floors() {
    let m = mesh(FLORIST, RelayMode::Passthrough);
    m.mediator.handle(say("flowers please")).await;
    let other = ConversationEnvelope::new("other", "https://user.example/").with_event(EnvelopeEvent::utterance(
        DialogEvent::text_from("b", "hello"),
        &Clock::System,
    ));
    let r = m.mediator.handle(other).await;
    assert_eq!(texts(&r), ["I can help with flowers."]);
    assert_eq!(m.mediator.session("other").await.floor, Floor::SelfHeld);
    assert_eq!(m.mediator.session("conv").await.floor, Floor::Delegate(FLORIST.into()));
}
