use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::backend::{run_backend, Backend, BackendResult, Directive, HistoryItem, HistoryRole};
use super::discovery::{DiscoveryClient, DiscoveryError, DiscoveryPolicy};
use super::{reply_skeleton, Agent};
use crate::clock::Clock;
use crate::envelope::{
    AssistantManifest, ConversationEnvelope, DialogEvent, EnvelopeEvent, EventType, ResponseCode, Sender,
};
use crate::fsm::{fold_serving, serving_step, DemandingState, FsmInput, LookupContext, ProtocolWarning, ServingState};
use crate::registry::{score_entry, RegistryEntry};
use crate::transport::{send_envelope, Direction, SessionData, SessionStore, Transport, TransportError};

/// Keyword routing entry: a capability matching any keyword goes to `url`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub keywords: Vec<String>,
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

/// How delegate replies reach the human.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum RelayMode {
    /// Forward the delegate's utterances with their own speaker ids.
    #[default]
    Passthrough,
    /// Re-utter the delegate's text as the mediator, after `prefix`.
    Revoice { prefix: String },
}

#[derive(Debug, Clone)]
pub struct MediatorOptions {
    pub name: String,
    pub endpoint: String,
    pub speaker_id: Option<String>,
    pub manifest: Option<AssistantManifest>,
    /// Said when the floor comes back after a delegate's bye.
    pub greeting: String,
    /// Said when a delegate cannot be found or reached.
    pub apology: String,
    pub routes: Vec<Route>,
    /// Registry to search when no route matches.
    pub discovery_registry: Option<String>,
    pub discovery: DiscoveryPolicy,
    pub relay: RelayMode,
    pub max_delegation_depth: usize,
    pub send_timeout: Duration,
    pub clock: Clock,
    pub inactivity: Duration,
}

impl MediatorOptions {
    pub fn new(name: impl Into<String>, endpoint: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            endpoint: endpoint.into(),
            speaker_id: None,
            manifest: None,
            greeting: "How can I assist you today?".to_string(),
            apology: "Sorry, I could not reach an assistant for that.".to_string(),
            routes: Vec::new(),
            discovery_registry: None,
            discovery: DiscoveryPolicy::default(),
            relay: RelayMode::Passthrough,
            max_delegation_depth: 1,
            send_timeout: crate::transport::DEFAULT_SEND_TIMEOUT,
            clock: Clock::System,
            inactivity: crate::transport::session::DEFAULT_INACTIVITY,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum Floor {
    #[default]
    SelfHeld,
    Delegate(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delegation {
    pub url: String,
    pub name: String,
    pub state: DemandingState,
}

#[derive(Debug, Clone, Default)]
pub struct MediatorSession {
    pub conversation_id: String,
    pub serving: ServingState,
    pub floor: Floor,
    pub delegate_stack: Vec<Delegation>,
    pub user_proxy: Option<Sender>,
    pub history: Vec<HistoryItem>,
    pub transcript: Vec<(Direction, ConversationEnvelope)>,
    pub warnings: Vec<ProtocolWarning>,
}

impl SessionData for MediatorSession {
    fn on_inactivity(&mut self) {
        self.serving = serving_step(self.serving, FsmInput::InactivityTimeout).state;
    }
}

enum Turn {
    Answered(Vec<EnvelopeEvent>),
    Failed(String),
}

/// Floor manager: owns the human-facing conversation and delegates segments
/// to specialists.
pub struct Mediator {
    opts: MediatorOptions,
    backend: Box<dyn Backend>,
    transport: Arc<dyn Transport>,
    sessions: SessionStore<MediatorSession>,
}

impl Mediator {
    pub fn new(opts: MediatorOptions, backend: Box<dyn Backend>, transport: Arc<dyn Transport>) -> Self {
        let sessions = SessionStore::new(opts.inactivity);
        Self {
            opts,
            backend,
            transport,
            sessions,
        }
    }

    pub fn options(&self) -> &MediatorOptions {
        &self.opts
    }

    /// Snapshot of a conversation's session.
    pub async fn session(&self, conversation_id: &str) -> MediatorSession {
        self.sessions.acquire(conversation_id).await.data.clone()
    }

    fn speaker(&self) -> &str {
        self.opts.speaker_id.as_deref().unwrap_or(&self.opts.name)
    }

    fn say(&self, text: &str) -> EnvelopeEvent {
        EnvelopeEvent::utterance(DialogEvent::text_from(self.speaker(), text), &self.opts.clock)
    }

    /// Utterances and whispers of `env`, readdressed to `url`.
    fn forwarded_dialog(env: &ConversationEnvelope, url: &str) -> Vec<EnvelopeEvent> {
        env.events
            .iter()
            .filter(|e| matches!(e.event_type, EventType::Utterance | EventType::Whisper))
            .map(|e| {
                let mut e = e.clone();
                e.to = Some(url.to_string());
                e
            })
            .collect()
    }

    fn relay(&self, reply: &ConversationEnvelope) -> Vec<EnvelopeEvent> {
        let mut out = Vec::new();
        match &self.opts.relay {
            RelayMode::Passthrough => {
                for e in &reply.events {
                    if matches!(e.event_type, EventType::Utterance | EventType::Bye) {
                        let mut e = e.clone();
                        e.to = None;
                        out.push(e);
                    }
                }
            }
            RelayMode::Revoice { prefix } => {
                let texts: Vec<String> = reply.events_of(EventType::Utterance).filter_map(|e| e.text()).collect();
                if !texts.is_empty() {
                    out.push(self.say(&format!("{prefix}{}", texts.join(" "))));
                }
                out.extend(reply.events_of(EventType::Bye).cloned().map(|mut e| {
                    e.to = None;
                    e
                }));
            }
        }
        out
    }

    /// Take the floor back after a delegate's bye.
    fn regain_floor(&self, session: &mut MediatorSession, events: &mut Vec<EnvelopeEvent>) {
        session.delegate_stack.pop();
        session.floor = match session.delegate_stack.last() {
            Some(d) => Floor::Delegate(d.url.clone()),
            None => Floor::SelfHeld,
        };
        if session.floor == Floor::SelfHeld {
            events.push(self.say(&self.opts.greeting));
        }
    }

    async fn exchange(
        &self,
        url: &str,
        env: &ConversationEnvelope,
        state: DemandingState,
        session: &mut MediatorSession,
    ) -> Result<(ConversationEnvelope, DemandingState), TransportError> {
        match send_envelope(self.transport.as_ref(), url, env, self.opts.send_timeout, state).await {
            Ok((reply, fold)) => {
                session.warnings.extend(fold.warnings);
                Ok((reply, fold.state))
            }
            Err((e, fold)) => {
                session.warnings.extend(fold.warnings);
                Err(e)
            }
        }
    }

    /// The floor is with a delegate: forward the user's turn and relay.
    async fn forward(&self, session: &mut MediatorSession, env: &ConversationEnvelope) -> Turn {
        let Some(delegate) = session.delegate_stack.last().cloned() else {
            return Turn::Failed("floor held by an unknown delegate".into());
        };
        let out = ConversationEnvelope::new(env.conversation_id(), &self.opts.endpoint)
            .with_events(Self::forwarded_dialog(env, &delegate.url));
        let mut events = Vec::new();
        match self.exchange(&delegate.url, &out, delegate.state, session).await {
            Ok((reply, state)) => {
                if let Some(d) = session.delegate_stack.last_mut() {
                    d.state = state;
                }
                events.extend(self.relay(&reply));
                if reply.has_event(EventType::Bye) {
                    self.regain_floor(session, &mut events);
                }
            }
            Err(e) => {
                tracing::warn!("delegate {} unreachable: {e}", delegate.url);
                events.push(self.say(&self.opts.apology));
                session.delegate_stack.pop();
                session.floor = Floor::SelfHeld;
            }
        }
        Turn::Answered(events)
    }

    fn route_for(&self, capability: &str, query: &str) -> Option<(String, String)> {
        let text = format!("{capability} {query}").to_lowercase();
        let words: Vec<String> = text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .map(str::to_string)
            .collect();
        self.opts.routes.iter().find_map(|r| {
            let hit = r.keywords.iter().any(|k| {
                let phrase: Vec<String> = k
                    .to_lowercase()
                    .split(|c: char| !c.is_alphanumeric())
                    .filter(|w| !w.is_empty())
                    .map(str::to_string)
                    .collect();
                !phrase.is_empty() && words.windows(phrase.len()).any(|w| w == phrase.as_slice())
            });
            hit.then(|| (r.url.clone(), r.name.clone().unwrap_or_else(|| r.url.clone())))
        })
    }

    /// Search the discovery registry, then confirm a candidate by its manifest.
    async fn discover(
        &self,
        conversation_id: &str,
        capability: &str,
        query: &str,
    ) -> Result<(String, String), DiscoveryError> {
        let registry = self
            .opts
            .discovery_registry
            .as_deref()
            .ok_or(DiscoveryError::NoCandidates)?;
        let mut client = DiscoveryClient::new(
            self.transport.as_ref(),
            &self.opts.endpoint,
            conversation_id,
            self.opts.discovery,
        )
        .with_speaker(self.speaker())
        .with_clock(self.opts.clock.clone());
        let candidates = client.find_assistants(registry, query).await?;

        let wanted: Vec<String> = capability
            .to_lowercase()
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .map(str::to_string)
            .collect();
        let mut fallback = None;
        for c in candidates {
            match client.request_manifest(&c.url).await {
                Ok(manifest) => {
                    let fits = score_entry(&wanted, &RegistryEntry::new(manifest.clone())) > 0;
                    let pick = (c.url.clone(), manifest.name().to_string());
                    if fits {
                        return Ok(pick);
                    }
                    fallback.get_or_insert(pick);
                }
                Err(e) => tracing::warn!("manifest of {} unavailable: {e}", c.url),
            }
        }
        fallback.ok_or(DiscoveryError::NoCandidates)
    }

    async fn delegate(
        &self,
        session: &mut MediatorSession,
        env: &ConversationEnvelope,
        capability: &str,
        query: &str,
        events: &mut Vec<EnvelopeEvent>,
    ) {
        if session.delegate_stack.len() >= self.opts.max_delegation_depth {
            events.push(self.say(&self.opts.apology));
            return;
        }
        let target = match self.route_for(capability, query) {
            Some(t) => Ok(t),
            None => self.discover(env.conversation_id(), capability, query).await,
        };
        let (url, name) = match target {
            Ok(t) => t,
            Err(e) => {
                tracing::warn!("no delegate for {capability:?}: {e}");
                events.push(self.say(&self.opts.apology));
                return;
            }
        };

        let out = ConversationEnvelope::new(env.conversation_id(), &self.opts.endpoint)
            .with_event(EnvelopeEvent::invite(&url).addressed_to(&url))
            .with_events(Self::forwarded_dialog(env, &url));
        match self.exchange(&url, &out, DemandingState::Idle, session).await {
            Ok((reply, state)) => {
                session.delegate_stack.push(Delegation {
                    url: url.clone(),
                    name,
                    state,
                });
                session.floor = Floor::Delegate(url.clone());
                events.push(EnvelopeEvent::invite(&url));
                events.extend(self.relay(&reply));
                if reply.has_event(EventType::Bye) {
                    self.regain_floor(session, events);
                }
            }
            Err(e) => {
                tracing::warn!("delegate {url} unreachable: {e}");
                events.push(self.say(&self.opts.apology));
            }
        }
    }

    /// The mediator holds the floor: consult its own backend.
    async fn own_turn(
        &self,
        session: &mut MediatorSession,
        env: &ConversationEnvelope,
        lookup: &LookupContext,
    ) -> Turn {
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
        let reply = match result {
            BackendResult::Success(r) => r,
            BackendResult::Failure(reason) => return Turn::Failed(reason),
        };
        let mut events = Vec::new();
        if !reply.text.is_empty() {
            events.push(self.say(&reply.text));
            session.history.push(HistoryItem {
                speaker_id: self.speaker().to_string(),
                text: reply.text.clone(),
                kind: EventType::Utterance,
                role: HistoryRole::Outbound,
            });
        }
        match reply.directive {
            None => {}
            Some(Directive::Bye) => events.push(EnvelopeEvent::bye(None, &self.opts.clock)),
            Some(Directive::Delegate(capability)) => {
                self.delegate(session, env, &capability, &lookup.query, &mut events)
                    .await;
            }
        }
        Turn::Answered(events)
    }

    /// One inbound envelope from the human side.
    pub async fn handle_turn(&self, session: &mut MediatorSession, env: ConversationEnvelope) -> ConversationEnvelope {
        session.conversation_id = env.conversation_id().to_string();
        session.user_proxy = Some(env.sender.clone());
        session.transcript.push((Direction::In, env.clone()));

        let mut events = Vec::new();
        if env.has_event(EventType::RequestManifest) {
            if let Some(m) = &self.opts.manifest {
                events.push(EnvelopeEvent::publish_manifest(m.clone()));
            }
        }

        let mut state = session.serving;
        let talks = env.has_event(EventType::Utterance) || env.has_event(EventType::Whisper);
        if state == ServingState::Idle && talks && !env.has_event(EventType::Invite) {
            state = serving_step(state, FsmInput::ReceivedInvite).state;
        }
        let fold = fold_serving(state, &env);
        session.warnings.extend(fold.warnings.iter().cloned());
        session.serving = fold.state;

        if let Some(lookup) = &fold.lookup {
            let turn = match session.floor {
                Floor::Delegate(_) => self.forward(session, &env).await,
                Floor::SelfHeld => self.own_turn(session, &env, lookup).await,
            };
            match turn {
                Turn::Answered(mut answer) => {
                    session.serving = serving_step(session.serving, FsmInput::LookupSucceeded).state;
                    events.append(&mut answer);
                    session.serving = serving_step(session.serving, FsmInput::SentUtteranceOrWhisper).state;
                    if session.floor == Floor::SelfHeld && events.last().is_some_and(|e| e.event_type == EventType::Bye)
                    {
                        // The mediator said bye itself.
                        session.serving = ServingState::Idle;
                    }
                }
                Turn::Failed(reason) => {
                    session.serving = serving_step(session.serving, FsmInput::LookupFailed).state;
                    events.push(EnvelopeEvent::whisper(
                        DialogEvent::text_from(self.speaker(), &reason),
                        &self.opts.clock,
                    ));
                    events.push(EnvelopeEvent::bye(None, &self.opts.clock));
                }
            }
        } else if env.has_event(EventType::Bye) {
            while let Some(d) = session.delegate_stack.pop() {
                let bye = ConversationEnvelope::new(env.conversation_id(), &self.opts.endpoint)
                    .with_event(EnvelopeEvent::bye(None, &self.opts.clock).addressed_to(&d.url));
                if let Err(e) = self.exchange(&d.url, &bye, d.state, session).await {
                    tracing::warn!("bye to {} failed: {e}", d.url);
                }
            }
            session.floor = Floor::SelfHeld;
            events.push(EnvelopeEvent::bye(None, &self.opts.clock));
        } else if env.has_event(EventType::Invite) {
            events.push(self.say(&self.opts.greeting));
        }

        let mut reply = reply_skeleton(&env, &self.opts.endpoint);
        if events.is_empty() {
            reply = reply
                .with_response_code(ResponseCode::new(400, "nothing to answer"))
                .with_event(EnvelopeEvent::whisper(
                    DialogEvent::text_from(self.speaker(), "nothing to answer"),
                    &self.opts.clock,
                ));
        } else {
            reply = reply.with_response_code(ResponseCode::ok()).with_events(events);
        }
        session.transcript.push((Direction::Out, reply.clone()));
        reply
    }
}

#[async_trait]
impl Agent for Mediator {
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
        self.handle_turn(&mut guard.data, env).await
    }
}
