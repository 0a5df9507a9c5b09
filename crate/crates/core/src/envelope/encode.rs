use serde::Serialize;
use serde_json::{Map, Value};

use super::types::*;
use super::{validate_envelope, CodecError};

/// Serialize a valid envelope to compact JSON.
///
/// Keys are written in a fixed order (`schema`, `conversation`, `sender`,
/// `responseCode`, `events`, then preserved unknown keys) so the output is
/// byte-stable for a given value.
pub fn serialize_envelope(env: &ConversationEnvelope) -> Result<String, CodecError> {
    let value = checked_value(env)?;
    Ok(value.to_string())
}

/// Same as [`serialize_envelope`], indented.
pub fn serialize_envelope_pretty(env: &ConversationEnvelope) -> Result<String, CodecError> {
    let value = checked_value(env)?;
    Ok(serde_json::to_string_pretty(&value).expect("JSON values always serialize"))
}

fn checked_value(env: &ConversationEnvelope) -> Result<Value, CodecError> {
    let violations = validate_envelope(env);
    if !violations.is_empty() {
        return Err(CodecError::ValidationFailed(violations));
    }
    Ok(envelope_to_value(env))
}

/// Wire form of an envelope, without validation.
pub fn envelope_to_value(env: &ConversationEnvelope) -> Value {
    let mut ovon = Map::new();
    ovon.insert("schema".into(), to_value(&env.schema));
    ovon.insert("conversation".into(), to_value(&env.conversation));
    ovon.insert("sender".into(), to_value(&env.sender));
    if let Some(code) = &env.response_code {
        ovon.insert("responseCode".into(), to_value(code));
    }
    ovon.insert(
        "events".into(),
        Value::Array(env.events.iter().map(event_to_value).collect()),
    );
    for (k, v) in &env.extra {
        ovon.entry(k.clone()).or_insert_with(|| v.clone());
    }

    let mut root = Map::new();
    root.insert("ovon".into(), Value::Object(ovon));
    for (k, v) in &env.outer_extra {
        root.entry(k.clone()).or_insert_with(|| v.clone());
    }
    Value::Object(root)
}

fn event_to_value(event: &EnvelopeEvent) -> Value {
    let mut obj = Map::new();
    if let Some(to) = &event.to {
        obj.insert("to".into(), Value::String(to.clone()));
    }
    obj.insert("eventType".into(), Value::String(event.event_type.as_str().into()));

    let mut params = Map::new();
    match &event.payload {
        Payload::Empty => {}
        Payload::Invite(t) => {
            params.insert("to".into(), to_value(t));
        }
        Payload::Dialog(d) => {
            params.insert("dialogEvent".into(), to_value(d));
        }
        Payload::Manifest(m) => {
            params.insert("manifest".into(), to_value(m));
        }
        Payload::Candidates(c) => {
            params.insert("candidates".into(), to_value(c));
        }
    }
    for (k, v) in &event.parameters_extra {
        params.entry(k.clone()).or_insert_with(|| v.clone());
    }
    if !params.is_empty() {
        obj.insert("parameters".into(), Value::Object(params));
    }
    for (k, v) in &event.extra {
        obj.entry(k.clone()).or_insert_with(|| v.clone());
    }
    Value::Object(obj)
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("envelope parts always serialize")
}
