//! A mediator hands a conversation to a florist and takes it back when the
//! florist says bye.

use std::sync::Arc;

use ovon::runtime::{
    Agent, Directive, Mediator, MediatorOptions, RelayMode, Route, Rule, RuleBackend, RuleSet, ScriptTurn,
    ScriptedBackend, Specialist, SpecialistOptions,
};
use ovon::transport::{Host, LoopbackTransport, TranscriptLog};
use ovon::{Clock, ConversationEnvelope, DialogEvent, EnvelopeEvent};

const FLORIST: &str = "https://florist.example/";

#[tokio::main]
async fn main() {
    let loopback = LoopbackTransport::new();
    let log = TranscriptLog::new(None, Clock::System);
    let script = vec![
        ScriptTurn {
            expect: None,
            reply: "Red Proteas are in stock. Anything to go with them?".into(),
            then: None,
        },
        ScriptTurn {
            expect: None,
            reply: "Done, delivered tomorrow.".into(),
            then: Some(Directive::Bye),
        },
    ];
    let florist = Specialist::new(
        SpecialistOptions::new("Pat", FLORIST),
        Box::new(ScriptedBackend::new(script)),
    );
    loopback.register(FLORIST, Arc::new(Host::new(Arc::new(florist), log.clone())));

    let mut opts = MediatorOptions::new("Cassandra", "https://cassandra.example/");
    opts.greeting = "Anything else?".into();
    opts.relay = RelayMode::Passthrough;
    opts.routes = vec![Route {
        keywords: vec!["flowers".into()],
        url: FLORIST.into(),
        name: Some("Pat".into()),
    }];
    let rules = RuleSet {
        rules: vec![Rule {
            keywords: vec!["flowers".into()],
            reply: "Let me connect you to the florist.".into(),
            then: Some(Directive::Delegate("flowers".into())),
        }],
        fallback: Some("How can I help?".into()),
    };
    let cassandra = Mediator::new(opts, Box::new(RuleBackend::new(rules)), loopback.clone());

    for say in ["I need flowers for my wife", "Just the Proteas, thanks"] {
        println!("Emmett: {say}");
        let env = ConversationEnvelope::new("errands", "https://emmett.example/").with_event(EnvelopeEvent::utterance(
            DialogEvent::text_from("Emmett", say),
            &Clock::System,
        ));
        let reply = cassandra.handle(env).await;
        for e in &reply.events {
            let who = e.dialog().map_or("", |d| d.speaker_id.as_str());
            match e.text() {
                Some(t) => println!("  {who}: {t}"),
                None => println!("  [{}]", e.event_type.as_str()),
            }
        }
        println!("  floor: {:?}", cassandra.session("errands").await.floor);
    }
    loopback.unregister(FLORIST);
}
