use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use super::types::*;
use super::validate::{validate_event_at, validate_header, validate_manifest_at};
use super::{CodecError, Violation};

/// Parse envelope text into the typed model.
///
/// Fails with [`CodecError::Syntax`] for malformed JSON and with
/// [`CodecError::SchemaViolation`] when the document does not describe a
/// valid envelope. All violations found are reported, in document order.
pub fn parse_envelope(raw: &str) -> Result<ConversationEnvelope, CodecError> {
    let value = parse_json(raw)?;
    let mut violations = Vec::new();
    let env = decode_envelope(value, &mut violations);
    match env {
        Some(env) if violations.is_empty() => Ok(env),
        _ => Err(CodecError::SchemaViolation(violations)),
    }
}

/// Parse a bare manifest object.
pub fn parse_manifest(raw: &str) -> Result<AssistantManifest, CodecError> {
    let value = parse_json(raw)?;
    let mut violations = Vec::new();
    let manifest = decode_typed::<AssistantManifest>(value, "manifest", &mut violations);
    if let Some(m) = &manifest {
        validate_manifest_at(m, "manifest", &mut violations);
    }
    match manifest {
        Some(m) if violations.is_empty() => Ok(m),
        _ => Err(CodecError::SchemaViolation(violations)),
    }
}

/// Parse a JSON array of manifests (registry bootstrap files).
pub fn parse_manifest_list(raw: &str) -> Result<Vec<AssistantManifest>, CodecError> {
    let value = parse_json(raw)?;
    let Value::Array(items) = value else {
        return Err(CodecError::SchemaViolation(vec![Violation::new(
            "$",
            "expected an array of manifests",
        )]));
    };
    let mut violations = Vec::new();
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.into_iter().enumerate() {
        let path = format!("[{i}]");
        if let Some(m) = decode_typed::<AssistantManifest>(item, &path, &mut violations) {
            validate_manifest_at(&m, &path, &mut violations);
            out.push(m);
        }
    }
    if violations.is_empty() {
        Ok(out)
    } else {
        Err(CodecError::SchemaViolation(violations))
    }
}

fn parse_json(raw: &str) -> Result<Value, CodecError> {
    serde_json::from_str(raw).map_err(|e| CodecError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub(crate) fn decode_envelope(value: Value, violations: &mut Vec<Violation>) -> Option<ConversationEnvelope> {
    let Value::Object(mut root) = value else {
        violations.push(Violation::new("$", "document root must be an object"));
        return None;
    };
    let Some(ovon) = root.shift_remove("ovon") else {
        violations.push(Violation::new("ovon", "required object is missing"));
        return None;
    };
    let Value::Object(mut ovon) = ovon else {
        violations.push(Violation::new("ovon", "must be an object"));
        return None;
    };

    let schema = take_typed::<Schema>(&mut ovon, "schema", violations).unwrap_or_else(|| Schema {
        version: String::new(),
        ..Schema::default()
    });
    let conversation = take_typed::<Conversation>(&mut ovon, "conversation", violations).unwrap_or_default();
    let sender = take_typed::<Sender>(&mut ovon, "sender", violations).unwrap_or_default();
    let response_code = ovon
        .shift_remove("responseCode")
        .and_then(|v| decode_response_code(v, violations));

    let mut env = ConversationEnvelope {
        schema,
        conversation,
        sender,
        response_code,
        events: Vec::new(),
        extra: Map::new(),
        outer_extra: root,
    };
    validate_header(&env, violations);

    match ovon.shift_remove("events") {
        None => {}
        Some(Value::Array(items)) => {
            for (i, item) in items.into_iter().enumerate() {
                let path = format!("ovon.events[{i}]");
                if let Some(event) = decode_event(item, &path, violations) {
                    validate_event_at(&event, &path, violations);
                    env.events.push(event);
                }
            }
        }
        Some(_) => violations.push(Violation::new("ovon.events", "must be an array")),
    }
    if env.events.is_empty() && !violations.iter().any(|v| v.path.starts_with("ovon.events")) {
        violations.push(Violation::new("ovon.events", "must contain at least one event"));
    }
    env.extra = ovon;
    Some(env)
}

fn decode_response_code(value: Value, violations: &mut Vec<Violation>) -> Option<ResponseCode> {
    const PATH: &str = "ovon.responseCode";
    match value {
        Value::Number(n) => match n.as_i64() {
            Some(code) => Some(ResponseCode {
                code,
                description: None,
                extra: Map::new(),
            }),
            None => {
                violations.push(Violation::new(PATH, "code must be an integer"));
                None
            }
        },
        Value::Object(mut obj) => {
            let code = match obj.shift_remove("code") {
                Some(Value::Number(n)) if n.as_i64().is_some() => n.as_i64(),
                _ => {
                    violations.push(Violation::new(format!("{PATH}.code"), "required integer is missing"));
                    None
                }
            };
            let description = match obj.shift_remove("description") {
                None | Some(Value::Null) => None,
                Some(Value::String(s)) => (!s.is_empty()).then_some(s),
                Some(_) => {
                    violations.push(Violation::new(format!("{PATH}.description"), "must be a string"));
                    None
                }
            };
            code.map(|code| ResponseCode {
                code,
                description,
                extra: obj,
            })
        }
        _ => {
            violations.push(Violation::new(
                PATH,
                "must be an integer or a {code, description} object",
            ));
            None
        }
    }
}

fn decode_event(value: Value, path: &str, violations: &mut Vec<Violation>) -> Option<EnvelopeEvent> {
    let Value::Object(mut obj) = value else {
        violations.push(Violation::new(path, "event must be an object"));
        return None;
    };

    let type_path = format!("{path}.eventType");
    let event_type = match obj.shift_remove("eventType") {
        Some(Value::String(s)) => match s.parse::<EventType>() {
            Ok(t) => Some(t),
            Err(msg) => {
                violations.push(Violation::new(&type_path, msg));
                None
            }
        },
        Some(_) => {
            violations.push(Violation::new(&type_path, "must be a string"));
            None
        }
        None => {
            violations.push(Violation::new(&type_path, "required field is missing"));
            None
        }
    };

    let to = match obj.shift_remove("to") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s),
        Some(_) => {
            violations.push(Violation::new(format!("{path}.to"), "must be a string"));
            None
        }
    };

    let params_path = format!("{path}.parameters");
    let mut params = match obj.shift_remove("parameters") {
        None | Some(Value::Null) => Map::new(),
        Some(Value::Object(p)) => p,
        Some(_) => {
            violations.push(Violation::new(&params_path, "must be an object"));
            Map::new()
        }
    };

    let mut found: Vec<Payload> = Vec::new();
    if let Some(v) = params.shift_remove("to") {
        let p = format!("{params_path}.to");
        found.extend(decode_typed::<InviteTarget>(v, &p, violations).map(Payload::Invite));
    }
    if let Some(v) = params.shift_remove("dialogEvent") {
        let p = format!("{params_path}.dialogEvent");
        found.extend(decode_typed::<DialogEvent>(v, &p, violations).map(Payload::Dialog));
    }
    if let Some(v) = params.shift_remove("manifest") {
        let p = format!("{params_path}.manifest");
        found.extend(decode_typed::<AssistantManifest>(v, &p, violations).map(Payload::Manifest));
    }
    if let Some(v) = params.shift_remove("candidates") {
        let p = format!("{params_path}.candidates");
        found.extend(decode_typed::<Vec<AssistantCandidate>>(v, &p, violations).map(Payload::Candidates));
    }
    if found.len() > 1 {
        violations.push(Violation::new(&params_path, "parameters carry more than one payload"));
        return None;
    }
    let payload = found.pop().unwrap_or(Payload::Empty);

    Some(EnvelopeEvent {
        to,
        event_type: event_type?,
        payload,
        parameters_extra: params,
        extra: obj,
    })
}

fn take_typed<T: DeserializeOwned>(
    obj: &mut Map<String, Value>,
    key: &str,
    violations: &mut Vec<Violation>,
) -> Option<T> {
    let value = obj.shift_remove(key)?;
    decode_typed(value, &format!("ovon.{key}"), violations)
}

fn decode_typed<T: DeserializeOwned>(value: Value, path: &str, violations: &mut Vec<Violation>) -> Option<T> {
    match serde_path_to_error::deserialize::<_, T>(value) {
        Ok(v) => Some(v),
        Err(e) => {
            let inner = e.path().to_string();
            let full = if inner == "." {
                path.to_string()
            } else if inner.starts_with('[') {
                format!("{path}{inner}")
            } else {
                format!("{path}.{inner}")
            };
            violations.push(Violation::new(full, e.into_inner().to_string()));
            None
        }
    }
}
