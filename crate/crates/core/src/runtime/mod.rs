//! Agent behaviour.
//!
//! Three agent kinds share the [`Agent`] interface:
//!
//! - [`Specialist`]: a serving agent answering from its backend.
//! - [`RegistryAgent`]: a discovery agent answering `requestManifest` and
//!   `findAssistant`.
//! - [`Mediator`]: a floor manager that owns the human-facing conversation,
//!   invites specialists when its backend asks for one, relays their replies,
//!   and takes the floor back when they say bye.

pub mod backend;
pub mod discovery;
mod mediator;
mod registry_agent;
mod specialist;

use async_trait::async_trait;

pub use backend::{
    run_backend, Backend, BackendResult, BackendSpec, Directive, EchoBackend, HistoryItem, HistoryRole, Reply, Rule,
    RuleBackend, RuleSet, ScriptTurn, ScriptedBackend,
};
pub use discovery::{DiscoveryClient, DiscoveryError, DiscoveryPolicy};
pub use mediator::{Delegation, Floor, Mediator, MediatorOptions, MediatorSession, RelayMode, Route};
pub use registry_agent::RegistryAgent;
pub use specialist::{Specialist, SpecialistOptions};

use crate::clock::Clock;
use crate::envelope::{ConversationEnvelope, DialogEvent, EnvelopeEvent, ResponseCode};

#[async_trait]
pub trait Agent: Send + Sync {
    fn name(&self) -> &str;

    fn endpoint(&self) -> &str;

    /// Handle one inbound envelope and produce exactly one reply.
    ///
    /// Protocol-level problems are reported inside the reply's
    /// `responseCode`, never as a missing reply.
    async fn handle(&self, env: ConversationEnvelope) -> ConversationEnvelope;

    /// Apply inactivity timeouts to quiet sessions; returns how many expired.
    fn expire_idle(&self) -> usize {
        0
    }
}

/// Reply skeleton: same conversation and schema, addressed back to the sender.
pub(crate) fn reply_skeleton(req: &ConversationEnvelope, from: &str) -> ConversationEnvelope {
    let mut reply = ConversationEnvelope::new(req.conversation_id(), from);
    reply.schema.version = req.schema.version.clone();
    reply.schema.url = req.schema.url.clone();
    reply.sender.to = Some(req.sender.from.clone());
    reply
}

/// A reply reporting a protocol-level error: the code rides in
/// `responseCode` and the reason in a whisper.
pub(crate) fn error_reply(
    req: &ConversationEnvelope,
    from: &str,
    speaker: &str,
    code: i64,
    message: &str,
    clock: &Clock,
) -> ConversationEnvelope {
    reply_skeleton(req, from)
        .with_response_code(ResponseCode::new(code, message))
        .with_event(EnvelopeEvent::whisper(DialogEvent::text_from(speaker, message), clock))
}
