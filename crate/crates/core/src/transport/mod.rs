//! Envelope transport.
//!
//! Every agent is reachable at one URL that accepts a POSTed envelope and
//! answers synchronously with one envelope. [`Host`] wraps an agent with its
//! transcript; [`HttpTransport`] and [`LoopbackTransport`] deliver envelopes
//! to hosts over HTTP or in-process.

mod http;
mod loopback;
pub mod session;
pub mod transcript;

use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use serde_json::json;

pub use http::{serve, HttpTransport, ServeError, ServiceHandle};
pub use loopback::LoopbackTransport;
pub use session::{inactivity_timeout_from_env, Session, SessionData, SessionStore};
pub use transcript::{read_transcript, Direction, TranscriptEntry, TranscriptLog};

use crate::envelope::{parse_envelope, serialize_envelope, CodecError, ConversationEnvelope};
use crate::fsm::{fold_received, fold_sent, DemandingState, Fold};
use crate::runtime::Agent;

/// Default time a client waits for a response envelope.
pub const DEFAULT_SEND_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentEndpoint {
    pub url: String,
    pub name: String,
}

#[derive(Debug, thiserror::Error)]
#[error("invalid endpoint url {url:?}: {reason}")]
pub struct EndpointError {
    pub url: String,
    pub reason: String,
}

impl AgentEndpoint {
    pub fn new(url: impl Into<String>, name: impl Into<String>) -> Result<Self, EndpointError> {
        let url = url.into();
        match reqwest::Url::parse(&url) {
            Ok(u) if matches!(u.scheme(), "http" | "https") && u.host_str().is_some() => {
                Ok(Self { url, name: name.into() })
            }
            Ok(u) => Err(EndpointError {
                reason: format!("unsupported scheme {:?}", u.scheme()),
                url,
            }),
            Err(e) => Err(EndpointError {
                reason: e.to_string(),
                url,
            }),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("timed out waiting for {0}")]
    Timeout(String),
    #[error("cannot reach {url}: {message}")]
    ConnectFailure { url: String, message: String },
    #[error("{url} rejected the envelope with HTTP {status}: {body}")]
    Rejected { url: String, status: u16, body: String },
    #[error("invalid response envelope from {url}: {source}")]
    InvalidResponseEnvelope {
        url: String,
        #[source]
        source: CodecError,
    },
    #[error("outbound envelope is invalid: {0}")]
    InvalidRequest(#[source] CodecError),
}

#[async_trait]
pub trait Transport: Send + Sync {
    async fn send(&self, url: &str, env: &ConversationEnvelope) -> Result<ConversationEnvelope, TransportError>;
}

/// Send `env` and fold the exchange into the caller's demanding state.
///
/// On failure the returned error is paired with the state after sending.
pub async fn send_envelope(
    transport: &dyn Transport,
    to: &str,
    env: &ConversationEnvelope,
    timeout: Duration,
    state: DemandingState,
) -> Result<(ConversationEnvelope, Fold<DemandingState>), (TransportError, Fold<DemandingState>)> {
    let sent = fold_sent(state, env);
    let reply = match tokio::time::timeout(timeout, transport.send(to, env)).await {
        Ok(Ok(reply)) => reply,
        Ok(Err(e)) => return Err((e, sent)),
        Err(_) => return Err((TransportError::Timeout(to.to_string()), sent)),
    };
    let mut received = fold_received(sent.state, &reply);
    let mut steps = sent.steps;
    steps.append(&mut received.steps);
    let mut warnings = sent.warnings;
    warnings.append(&mut received.warnings);
    received.steps = steps;
    received.warnings = warnings;
    Ok((reply, received))
}

/// An agent bound to its transcript log.
pub struct Host {
    agent: Arc<dyn Agent>,
    transcript: Arc<TranscriptLog>,
}

/// Outcome of handling a raw request body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawReply {
    pub status: u16,
    pub body: String,
}

impl Host {
    pub fn new(agent: Arc<dyn Agent>, transcript: Arc<TranscriptLog>) -> Self {
        Self { agent, transcript }
    }

    pub fn agent(&self) -> &Arc<dyn Agent> {
        &self.agent
    }

    pub fn transcript(&self) -> &Arc<TranscriptLog> {
        &self.transcript
    }

    /// Handle a parsed envelope, recording it and the reply.
    pub async fn dispatch(&self, env: ConversationEnvelope) -> ConversationEnvelope {
        let peer = env.sender.from.clone();
        let name = self.agent.name().to_string();
        if let Err(e) = self.transcript.record(&name, Direction::In, &peer, &env) {
            tracing::warn!("{e}");
        }
        let reply = self.agent.handle(env).await;
        if let Err(e) = self.transcript.record(&name, Direction::Out, &peer, &reply) {
            tracing::warn!("{e}");
        }
        reply
    }

    /// Handle a request body: 200 with an envelope, or 400 when the body does
    /// not parse as an envelope.
    pub async fn dispatch_raw(&self, body: &str) -> RawReply {
        match parse_envelope(body) {
            Ok(env) => {
                let reply = self.dispatch(env).await;
                match serialize_envelope(&reply) {
                    Ok(body) => RawReply { status: 200, body },
                    Err(e) => RawReply {
                        status: 500,
                        body: error_body(&e),
                    },
                }
            }
            Err(e) => RawReply {
                status: 400,
                body: error_body(&e),
            },
        }
    }
}

fn error_body(e: &CodecError) -> String {
    json!({
        "error": e.to_string(),
        "violations": e.violations(),
    })
    .to_string()
}
