use std::time::Duration;

use async_trait::async_trait;

use super::backend::{run_backend, Backend, BackendResult, Directive, HistoryItem, HistoryRole};
use super::{error_reply, reply_skeleton, Agent};
use crate::clock::Clock;
use crate::envelope::{AssistantManifest, ConversationEnvelope, DialogEvent, EnvelopeEvent, EventType, ResponseCode};
use crate::fsm::{fold_serving, serving_step, FsmInput, ProtocolWarning, ServingState};
use crate::transport::{SessionData, SessionStore};

#[derive(Debug, Clone)]
pub struct SpecialistOptions {
    pub name: String,
    pub endpoint: String,
    /// `speakerId` on this agent's dialog events; defaults to `name`.
    pub speaker_id: Option<String>,
    pub manifest: Option<AssistantManifest>,
    /// Reply to an invite that carries no utterance.
    pub greeting: String,
    pub clock: Clock,
    pub inactivity: Duration,
}

impl SpecialistOptions {
    pub fn new(name: impl Into<String>, endpoint: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            endpoint: endpoint.into(),
            speaker_id: None,
            manifest: None,
            greeting: "Hello! How can I help you today?".to_string(),
            clock: Clock::System,
            inactivity: crate::transport::session::DEFAULT_INACTIVITY,
        }
    }
}

#[derive(Default)]
struct SpecialistSession {
    state: ServingState,
    history: Vec<HistoryItem>,
    warnings: Vec<ProtocolWarning>,
}

impl SessionData for SpecialistSession {
    fn on_inactivity(&mut self) {
        self.state = serving_step(self.state, FsmInput::InactivityTimeout).state;
    }
}

/// A serving agent that answers from a backend.
pub struct Specialist {
    opts: SpecialistOptions,
    backend: Box<dyn Backend>,
    sessions: SessionStore<SpecialistSession>,
}

impl Specialist {
    pub fn new(opts: SpecialistOptions, backend: Box<dyn Backend>) -> Self {
        let sessions = SessionStore::new(opts.inactivity);
        Self {
            opts,
            backend,
            sessions,
        }
    }

    fn speaker(&self) -> &str {
        self.opts.speaker_id.as_deref().unwrap_or(&self.opts.name)
    }

    fn say(&self, text: &str) -> EnvelopeEvent {
        EnvelopeEvent::utterance(DialogEvent::text_from(self.speaker(), text), &self.opts.clock)
    }

    /// Warnings recorded for a conversation so far.
    pub async fn warnings(&self, conversation_id: &str) -> Vec<ProtocolWarning> {
        self.sessions.acquire(conversation_id).await.data.warnings.clone()
    }

    pub async fn state(&self, conversation_id: &str) -> ServingState {
        self.sessions.acquire(conversation_id).await.data.state
    }
}

#[async_trait]
impl Agent for Specialist {
    fn name(&self) -> &str {
        &self.opts.name
    }

    fn endpoint(&self) -> &str {
        &self.opts.endpoint
    }

    fn expire_idle(&self) -> usize {
        self.sessions.expire_idle()
    }

    async fn handle(&self, env: ConversationEnvelope) -> ConversationEnvelope {
        let mut guard = self.sessions.acquire(env.conversation_id()).await;
        let session = &mut guard.data;
        let mut events = Vec::new();

        if env.has_event(EventType::RequestManifest) {
            if let Some(m) = &self.opts.manifest {
                events.push(EnvelopeEvent::publish_manifest(m.clone()));
            }
        }

        // A conversation opened without an invite is treated as invited.
        let mut state = session.state;
        let talks = env.has_event(EventType::Utterance) || env.has_event(EventType::Whisper);
        if state == ServingState::Idle && talks && !env.has_event(EventType::Invite) {
            state = serving_step(state, FsmInput::ReceivedInvite).state;
        }

        let fold = fold_serving(state, &env);
        session.warnings.extend(fold.warnings.iter().cloned());
        session.state = fold.state;

        if let Some(lookup) = fold.lookup {
            let result = run_backend(
                self.backend.as_ref(),
                &session.history,
                &lookup.query,
                lookup.whisper.as_deref(),
            );
            session.history.push(HistoryItem {
                speaker_id: lookup.speaker_id.clone(),
                text: lookup.query.clone(),
                kind: lookup.kind.unwrap_or(EventType::Utterance),
                role: HistoryRole::Inbound,
            });
            match result {
                BackendResult::Success(reply) => {
                    let t = serving_step(session.state, FsmInput::LookupSucceeded);
                    session.state = t.state;
                    if !reply.text.is_empty() {
                        events.push(self.say(&reply.text));
                        session.history.push(HistoryItem {
                            speaker_id: self.speaker().to_string(),
                            text: reply.text.clone(),
                            kind: EventType::Utterance,
                            role: HistoryRole::Outbound,
                        });
                    }
                    session.state = serving_step(session.state, FsmInput::SentUtteranceOrWhisper).state;
                    if reply.directive == Some(Directive::Bye) {
                        events.push(EnvelopeEvent::bye(None, &self.opts.clock));
                        // Leaving by our own bye ends our part of the conversation.
                        session.state = ServingState::Idle;
                    }
                }
                BackendResult::Failure(reason) => {
                    session.state = serving_step(session.state, FsmInput::LookupFailed).state;
                    events.push(EnvelopeEvent::whisper(
                        DialogEvent::text_from(self.speaker(), &reason),
                        &self.opts.clock,
                    ));
                    events.push(EnvelopeEvent::bye(None, &self.opts.clock));
                }
            }
        } else if env.has_event(EventType::Bye) {
            events.push(EnvelopeEvent::bye(None, &self.opts.clock));
        } else if env.has_event(EventType::Invite) && session.state == ServingState::Ready {
            events.push(self.say(&self.opts.greeting));
        }

        if events.is_empty() {
            let kinds: Vec<_> = env.events.iter().map(|e| e.event_type.as_str()).collect();
            let msg = format!("cannot handle {} in state {:?}", kinds.join("+"), session.state);
            return error_reply(&env, &self.opts.endpoint, self.speaker(), 400, &msg, &self.opts.clock);
        }

        let mut reply = reply_skeleton(&env, &self.opts.endpoint).with_events(events);
        if !reply.has_event(EventType::PublishManifest) || reply.events.len() > 1 {
            reply = reply.with_response_code(ResponseCode::ok());
        }
        reply
    }
}
