use super::types::*;
use super::Violation;

/// Check every envelope invariant; an empty list means the envelope is valid.
///
/// Violations come back in document order.
pub fn validate_envelope(env: &ConversationEnvelope) -> Vec<Violation> {
    let mut out = Vec::new();
    validate_header(env, &mut out);
    if env.events.is_empty() {
        out.push(Violation::new("ovon.events", "must contain at least one event"));
    }
    for (i, event) in env.events.iter().enumerate() {
        validate_event_at(event, &format!("ovon.events[{i}]"), &mut out);
    }
    out
}

/// Check a standalone manifest, with paths rooted at `manifest`.
pub fn validate_manifest(m: &AssistantManifest) -> Vec<Violation> {
    let mut out = Vec::new();
    validate_manifest_at(m, "manifest", &mut out);
    out
}

pub(crate) fn validate_header(env: &ConversationEnvelope, out: &mut Vec<Violation>) {
    if env.schema.version.trim().is_empty() {
        out.push(Violation::new(
            "ovon.schema.version",
            "required field is missing or empty",
        ));
    }
    if env.conversation.id.is_empty() {
        out.push(Violation::new(
            "ovon.conversation.id",
            "required field is missing or empty",
        ));
    }
    if env.sender.from.is_empty() {
        out.push(Violation::new("ovon.sender.from", "required field is missing or empty"));
    }
}

pub(crate) fn validate_event_at(event: &EnvelopeEvent, path: &str, out: &mut Vec<Violation>) {
    let params = format!("{path}.parameters");
    if !event.event_type.accepts(&event.payload) {
        out.push(Violation::new(
            params,
            format!(
                "{} event cannot carry a {} payload",
                event.event_type,
                event.payload.shape_name()
            ),
        ));
        return;
    }
    match &event.payload {
        Payload::Empty => {}
        Payload::Invite(target) => {
            if target.url.is_empty() {
                out.push(Violation::new(format!("{params}.to.url"), "invite target url is empty"));
            }
        }
        Payload::Dialog(d) => {
            let dialog_path = format!("{params}.dialogEvent");
            // A bye may carry a reason without a text feature.
            let needs_text = event.event_type != EventType::Bye;
            validate_dialog_at(d, &dialog_path, needs_text, out);
        }
        Payload::Manifest(m) => validate_manifest_at(m, &format!("{params}.manifest"), out),
        Payload::Candidates(cs) => {
            for (i, c) in cs.iter().enumerate() {
                if c.url.is_empty() {
                    out.push(Violation::new(
                        format!("{params}.candidates[{i}].url"),
                        "candidate url is empty",
                    ));
                }
            }
        }
    }
}

fn validate_dialog_at(d: &DialogEvent, path: &str, needs_text: bool, out: &mut Vec<Violation>) {
    if d.speaker_id.is_empty() {
        out.push(Violation::new(
            format!("{path}.speakerId"),
            "required field is missing or empty",
        ));
    }
    if needs_text && !d.features.contains_key("text") {
        out.push(Violation::new(
            format!("{path}.features.text"),
            "text feature is missing",
        ));
    }
    for (name, feature) in &d.features {
        if feature.tokens.is_empty() {
            out.push(Violation::new(
                format!("{path}.features.{name}.tokens"),
                "must contain at least one token",
            ));
        }
    }
}

pub(crate) fn validate_manifest_at(m: &AssistantManifest, path: &str, out: &mut Vec<Violation>) {
    let id = &m.identification;
    if id.service_endpoint.is_empty() {
        out.push(Violation::new(
            format!("{path}.identification.serviceEndpoint"),
            "required field is missing or empty",
        ));
    }
    if id.conversational_name.is_empty() {
        out.push(Violation::new(
            format!("{path}.identification.conversationalName"),
            "required field is missing or empty",
        ));
    }
    if m.capabilities.is_empty() {
        out.push(Violation::new(
            format!("{path}.capabilities"),
            "must contain at least one capability",
        ));
    }
    for (i, cap) in m.capabilities.iter().enumerate() {
        if cap.keywords.is_empty() {
            out.push(Violation::new(
                format!("{path}.capabilities[{i}].keywords"),
                "must contain at least one keyword",
            ));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::parse_envelope;

    fn manifest() -> AssistantManifest {
        let raw = include_str!("../../../../corpus/listing4.json");
        crate::envelope::parse_manifest(raw).unwrap()
    }

    #[test]
    fn listing6_has_no_violations() {
        let env = parse_envelope(include_str!("../../../../corpus/listing6.json")).unwrap();
        assert_eq!(validate_envelope(&env), vec![]);
    }

    #[test]
    fn utterance_carrying_a_manifest_is_one_violation() {
        let env = ConversationEnvelope::new("c1", "https://a.example").with_event(EnvelopeEvent {
            to: None,
            event_type: EventType::Utterance,
            payload: Payload::Manifest(manifest()),
            parameters_extra: Default::default(),
            extra: Default::default(),
        });
        let v = validate_envelope(&env);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "ovon.events[0].parameters");
    }

    #[test]
    fn manifest_without_capabilities() {
        let mut m = manifest();
        m.capabilities.clear();
        let env = ConversationEnvelope::new("c1", "https://a.example").with_event(EnvelopeEvent {
            to: None,
            event_type: EventType::PublishManifest,
            payload: Payload::Manifest(m),
            parameters_extra: Default::default(),
            extra: Default::default(),
        });
        let v = validate_envelope(&env);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].path, "ovon.events[0].parameters.manifest.capabilities");
    }

    #[test]
    fn empty_events_and_header_in_document_order() {
        let env = ConversationEnvelope::new("", "");
        let paths: Vec<_> = validate_envelope(&env).into_iter().map(|v| v.path).collect();
        assert_eq!(paths, ["ovon.conversation.id", "ovon.sender.from", "ovon.events"]);
    }

    #[test]
    fn bye_reason_without_text_is_fine() {
        let mut d = DialogEvent::text_from("pat", "bye");
        d.features.clear();
        let env = ConversationEnvelope::new("c", "f").with_event(EnvelopeEvent {
            to: None,
            event_type: EventType::Bye,
            payload: Payload::Dialog(d.clone()),
            parameters_extra: Default::default(),
            extra: Default::default(),
        });
        assert!(validate_envelope(&env).is_empty());
    }
}
