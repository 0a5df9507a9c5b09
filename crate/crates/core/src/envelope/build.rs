use super::types::*;
use super::CodecError;
use crate::clock::Clock;

/// Build an event of `kind` around `payload`, addressed to `to`.
///
/// Dialog payloads without a start time are stamped with the current
/// wall-clock time.
pub fn build_event(kind: EventType, payload: Payload, to: Option<&str>) -> Result<EnvelopeEvent, CodecError> {
    build_event_with_clock(kind, payload, to, &Clock::System)
}

/// [`build_event`] with an explicit time source.
pub fn build_event_with_clock(
    kind: EventType,
    mut payload: Payload,
    to: Option<&str>,
    clock: &Clock,
) -> Result<EnvelopeEvent, CodecError> {
    if !kind.accepts(&payload) {
        return Err(CodecError::PayloadMismatch {
            event_type: kind,
            payload: payload.shape_name(),
        });
    }
    if let Payload::Dialog(d) = &mut payload {
        if d.span.start_time.is_empty() {
            d.span.start_time = clock.now();
        }
    }
    Ok(EnvelopeEvent {
        to: to.map(str::to_string),
        event_type: kind,
        payload,
        parameters_extra: Extensions::new(),
        extra: Extensions::new(),
    })
}

/// Text of a dialog event: the `text` feature's token values joined by a
/// single space.
pub fn extract_text(d: &DialogEvent) -> Result<String, CodecError> {
    let feature = d.features.get("text").ok_or(CodecError::MissingTextFeature)?;
    Ok(feature
        .tokens
        .iter()
        .map(|t| t.value.as_str())
        .collect::<Vec<_>>()
        .join(" "))
}

impl EnvelopeEvent {
    pub fn invite(url: impl Into<String>) -> Self {
        Self::unchecked(EventType::Invite, Payload::Invite(InviteTarget::new(url)))
    }

    pub fn utterance(dialog: DialogEvent, clock: &Clock) -> Self {
        Self::dialog_event(EventType::Utterance, dialog, clock)
    }

    pub fn whisper(dialog: DialogEvent, clock: &Clock) -> Self {
        Self::dialog_event(EventType::Whisper, dialog, clock)
    }

    pub fn find_assistant(dialog: DialogEvent, clock: &Clock) -> Self {
        Self::dialog_event(EventType::FindAssistant, dialog, clock)
    }

    pub fn bye(reason: Option<DialogEvent>, clock: &Clock) -> Self {
        match reason {
            Some(d) => Self::dialog_event(EventType::Bye, d, clock),
            None => Self::unchecked(EventType::Bye, Payload::Empty),
        }
    }

    pub fn request_manifest() -> Self {
        Self::unchecked(EventType::RequestManifest, Payload::Empty)
    }

    pub fn publish_manifest(m: AssistantManifest) -> Self {
        Self::unchecked(EventType::PublishManifest, Payload::Manifest(m))
    }

    pub fn propose_assistant(candidates: Vec<AssistantCandidate>) -> Self {
        Self::unchecked(EventType::ProposeAssistant, Payload::Candidates(candidates))
    }

    pub fn addressed_to(mut self, to: impl Into<String>) -> Self {
        self.to = Some(to.into());
        self
    }

    fn dialog_event(kind: EventType, dialog: DialogEvent, clock: &Clock) -> Self {
        build_event_with_clock(kind, Payload::Dialog(dialog), None, clock)
            .expect("dialog payload fits dialog event types")
    }

    fn unchecked(kind: EventType, payload: Payload) -> Self {
        debug_assert!(kind.accepts(&payload));
        EnvelopeEvent {
            to: None,
            event_type: kind,
            payload,
            parameters_extra: Extensions::new(),
            extra: Extensions::new(),
        }
    }
}
