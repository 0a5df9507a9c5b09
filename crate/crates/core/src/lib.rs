//! Interoperable conversational agents.
//!
//! Agents exchange conversation envelopes carrying utterances, whispers,
//! invites, byes and the discovery events (`requestManifest`,
//! `publishManifest`, `findAssistant`, `proposeAssistant`). This crate
//! provides:
//!
//! - [`envelope`]: the JSON codec and validator.
//! - [`fsm`]: pure transition functions for serving, demanding and discovery
//!   roles.
//! - [`registry`]: manifest storage and keyword matching for discovery.
//! - [`runtime`]: agent behaviour (specialists, registries, a floor-managing
//!   mediator) over pluggable response backends.
//! - [`transport`]: HTTP and in-process transports, session store and
//!   transcript files.
//! - [`harness`]: multi-agent scenario replay, sequence expectations and
//!   sequence diagram export.
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability.

pub mod clock;
pub mod config;
pub mod envelope;
pub mod fsm;
pub mod harness;
pub mod registry;
pub mod runtime;
pub mod transport;

pub use clock::Clock;
pub use envelope::{
    AssistantCandidate, AssistantManifest, CodecError, ConversationEnvelope, DialogEvent, EnvelopeEvent, EventType,
    Payload, ResponseCode, ServicingMode, Violation,
};
