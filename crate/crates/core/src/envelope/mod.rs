//! Conversation envelope codec.
//!
//! The envelope is the single JSON document agents exchange:
//!
//! ```text
//! {"ovon": {"schema": {...}, "conversation": {"id": ...}, "sender": {...},
//!           "responseCode": {...}, "events": [ ... ]}}
//! ```
//!
//! Parsing is done in two passes. The raw text is first decoded into the typed
//! model with lenient defaults, collecting structural problems as
//! [`Violation`]s with a dotted path (`ovon.events[1].parameters`). The typed
//! value is then checked by [`validate_envelope`]. Unknown keys on any object
//! are kept in that object's `extra` map and written back on serialize.

mod build;
mod decode;
mod encode;
mod types;
mod validate;

pub use build::{build_event, build_event_with_clock, extract_text};
pub use decode::{parse_envelope, parse_manifest, parse_manifest_list};
pub use encode::{envelope_to_value, serialize_envelope, serialize_envelope_pretty};
pub use types::*;
pub use validate::{validate_envelope, validate_manifest};

use std::fmt;

/// Schema version emitted by envelopes built in this crate.
pub const SCHEMA_VERSION: &str = "0.9.2";

/// One failed invariant, located by a dotted JSON path.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, thiserror::Error)]
pub enum CodecError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema violation: {}", join_violations(.0))]
    SchemaViolation(Vec<Violation>),
    #[error("envelope is not valid: {}", join_violations(.0))]
    ValidationFailed(Vec<Violation>),
    #[error("payload {payload} cannot be carried by a {event_type} event")]
    PayloadMismatch {
        event_type: EventType,
        payload: &'static str,
    },
    #[error("dialog event has no \"text\" feature")]
    MissingTextFeature,
}

impl CodecError {
    /// Violations carried by the error, if any.
    pub fn violations(&self) -> &[Violation] {
        match self {
            CodecError::SchemaViolation(v) | CodecError::ValidationFailed(v) => v,
            _ => &[],
        }
    }
}
