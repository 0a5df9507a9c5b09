use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::SCHEMA_VERSION;

/// Unknown keys of a JSON object, kept in wire order.
pub type Extensions = Map<String, Value>;

#[derive(Debug, Clone, PartialEq)]
pub struct ConversationEnvelope {
    pub schema: Schema,
    pub conversation: Conversation,
    pub sender: Sender,
    pub response_code: Option<ResponseCode>,
    pub events: Vec<EnvelopeEvent>,
    /// Unknown keys inside `ovon`.
    pub extra: Extensions,
    /// Unknown keys next to `ovon` at the document root.
    pub outer_extra: Extensions,
}

impl ConversationEnvelope {
    /// An envelope with the current schema version and no events.
    pub fn new(conversation_id: impl Into<String>, from: impl Into<String>) -> Self {
        Self {
            schema: Schema::default(),
            conversation: Conversation {
                id: conversation_id.into(),
                extra: Extensions::new(),
            },
            sender: Sender {
                from: from.into(),
                ..Sender::default()
            },
            response_code: None,
            events: Vec::new(),
            extra: Extensions::new(),
            outer_extra: Extensions::new(),
        }
    }

    pub fn conversation_id(&self) -> &str {
        &self.conversation.id
    }

    pub fn with_event(mut self, event: EnvelopeEvent) -> Self {
        self.events.push(event);
        self
    }

    pub fn with_events(mut self, events: impl IntoIterator<Item = EnvelopeEvent>) -> Self {
        self.events.extend(events);
        self
    }

    pub fn with_response_code(mut self, code: ResponseCode) -> Self {
        self.response_code = Some(code);
        self
    }

    pub fn with_sender_to(mut self, to: impl Into<String>) -> Self {
        self.sender.to = Some(to.into());
        self
    }

    /// Recipient of `event`: the per-event `to` wins over `sender.to`.
    pub fn recipient_of<'a>(&'a self, event: &'a EnvelopeEvent) -> Option<&'a str> {
        event.to.as_deref().or(self.sender.to.as_deref())
    }

    pub fn events_of(&self, kind: EventType) -> impl Iterator<Item = &EnvelopeEvent> {
        self.events.iter().filter(move |e| e.event_type == kind)
    }

    pub fn has_event(&self, kind: EventType) -> bool {
        self.events.iter().any(|e| e.event_type == kind)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(default)]
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(flatten)]
    pub extra: Extensions,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            version: SCHEMA_VERSION.to_string(),
            url: None,
            extra: Extensions::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Conversation {
    #[serde(default)]
    pub id: String,
    #[serde(flatten)]
    pub extra: Extensions,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Sender {
    #[serde(default)]
    pub from: String,
    #[serde(rename = "reply-to", default, skip_serializing_if = "Option::is_none")]
    pub reply_to: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<String>,
    #[serde(flatten)]
    pub extra: Extensions,
}

/// HTTP-style status carried inside an envelope.
///
/// Accepted on the wire as a bare integer or as `{"code", "description"}`;
/// always written in the object form. An empty description is the same as
/// none.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResponseCode {
    pub code: i64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(flatten)]
    pub extra: Extensions,
}

impl ResponseCode {
    pub fn new(code: i64, description: impl Into<String>) -> Self {
        let description = description.into();
        Self {
            code,
            description: (!description.is_empty()).then_some(description),
            extra: Extensions::new(),
        }
    }

    pub fn ok() -> Self {
        Self::new(200, "OK")
    }

    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.code)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum EventType {
    Invite,
    Utterance,
    Whisper,
    Bye,
    RequestManifest,
    PublishManifest,
    FindAssistant,
    #[serde(alias = "proposedAssistant")]
    ProposeAssistant,
}

impl EventType {
    pub const ALL: [EventType; 8] = [
        EventType::Invite,
        EventType::Utterance,
        EventType::Whisper,
        EventType::Bye,
        EventType::RequestManifest,
        EventType::PublishManifest,
        EventType::FindAssistant,
        EventType::ProposeAssistant,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventType::Invite => "invite",
            EventType::Utterance => "utterance",
            EventType::Whisper => "whisper",
            EventType::Bye => "bye",
            EventType::RequestManifest => "requestManifest",
            EventType::PublishManifest => "publishManifest",
            EventType::FindAssistant => "findAssistant",
            EventType::ProposeAssistant => "proposeAssistant",
        }
    }

    /// Whether `payload` is a legal parameter shape for this event type.
    pub fn accepts(self, payload: &Payload) -> bool {
        matches!(
            (self, payload),
            (EventType::Invite, Payload::Invite(_))
                | (
                    EventType::Utterance | EventType::Whisper | EventType::FindAssistant,
                    Payload::Dialog(_)
                )
                | (EventType::Bye, Payload::Empty | Payload::Dialog(_))
                | (EventType::RequestManifest, Payload::Empty)
                | (EventType::PublishManifest, Payload::Manifest(_))
                | (EventType::ProposeAssistant, Payload::Candidates(_))
        )
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "invite" => Ok(EventType::Invite),
            "utterance" => Ok(EventType::Utterance),
            "whisper" => Ok(EventType::Whisper),
            "bye" => Ok(EventType::Bye),
            "requestManifest" => Ok(EventType::RequestManifest),
            "publishManifest" => Ok(EventType::PublishManifest),
            "findAssistant" => Ok(EventType::FindAssistant),
            "proposeAssistant" | "proposedAssistant" => Ok(EventType::ProposeAssistant),
            other => Err(format!("unknown eventType {other:?}")),
        }
    }
}

/// Typed contents of an event's `parameters` object.
#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    /// No recognised parameter.
    Empty,
    /// `parameters.to`
    Invite(InviteTarget),
    /// `parameters.dialogEvent`
    Dialog(DialogEvent),
    /// `parameters.manifest`
    Manifest(AssistantManifest),
    /// `parameters.candidates`
    Candidates(Vec<AssistantCandidate>),
}

impl Payload {
    pub fn shape_name(&self) -> &'static str {
        match self {
            Payload::Empty => "empty",
            Payload::Invite(_) => "invite target",
            Payload::Dialog(_) => "dialog event",
            Payload::Manifest(_) => "manifest",
            Payload::Candidates(_) => "candidate list",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeEvent {
    pub to: Option<String>,
    pub event_type: EventType,
    pub payload: Payload,
    /// Unknown keys inside `parameters`.
    pub parameters_extra: Extensions,
    /// Unknown keys on the event object.
    pub extra: Extensions,
}

impl EnvelopeEvent {
    pub fn dialog(&self) -> Option<&DialogEvent> {
        match &self.payload {
            Payload::Dialog(d) => Some(d),
            _ => None,
        }
    }

    pub fn manifest(&self) -> Option<&AssistantManifest> {
        match &self.payload {
            Payload::Manifest(m) => Some(m),
            _ => None,
        }
    }

    pub fn candidates(&self) -> &[AssistantCandidate] {
        match &self.payload {
            Payload::Candidates(c) => c,
            _ => &[],
        }
    }

    pub fn invite_target(&self) -> Option<&str> {
        match &self.payload {
            Payload::Invite(t) => Some(&t.url),
            _ => None,
        }
    }

    /// Text of the dialog payload, if there is one with a text feature.
    pub fn text(&self) -> Option<String> {
        self.dialog().and_then(|d| d.text().ok())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InviteTarget {
    #[serde(default)]
    pub url: String,
    #[serde(flatten)]
    pub extra: Extensions,
}

impl InviteTarget {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            extra: Extensions::new(),
        }
    }
}

/// Speaker-attributed, time-stamped, tokenized text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DialogEvent {
    #[serde(default)]
    pub speaker_id: String,
    #[serde(default, skip_serializing_if = "Span::is_empty")]
    pub span: Span,
    #[serde(default)]
    pub features: IndexMap<String, Feature>,
    #[serde(flatten)]
    pub extra: Extensions,
}

impl DialogEvent {
    /// A single-token text dialog event with an unset start time.
    pub fn text_from(speaker_id: impl Into<String>, text: impl Into<String>) -> Self {
        let mut features = IndexMap::new();
        features.insert(
            "text".to_string(),
            Feature {
                mime_type: "text/plain".to_string(),
                tokens: vec![Token::new(text)],
                extra: Extensions::new(),
            },
        );
        Self {
            speaker_id: speaker_id.into(),
            span: Span::default(),
            features,
            extra: Extensions::new(),
        }
    }

    pub fn with_start_time(mut self, start: impl Into<String>) -> Self {
        self.span.start_time = start.into();
        self
    }

    pub fn text(&self) -> Result<String, super::CodecError> {
        super::extract_text(self)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Span {
    /// Kept verbatim; the wire carries several timestamp formats.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub start_time: String,
    #[serde(flatten)]
    pub extra: Extensions,
}

impl Span {
    pub fn is_empty(&self) -> bool {
        self.start_time.is_empty() && self.extra.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Feature {
    #[serde(default)]
    pub mime_type: String,
    #[serde(default)]
    pub tokens: Vec<Token>,
    #[serde(flatten)]
    pub extra: Extensions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub value: String,
    #[serde(flatten)]
    pub extra: Extensions,
}

impl Token {
    pub fn new(value: impl Into<String>) -> Self {
        Self {
            value: value.into(),
            extra: Extensions::new(),
        }
    }
}

/// Identity and capabilities an agent publishes about itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssistantManifest {
    pub identification: Identification,
    #[serde(default)]
    pub capabilities: Vec<Capability>,
    #[serde(flatten)]
    pub extra: Extensions,
}

impl AssistantManifest {
    pub fn endpoint(&self) -> &str {
        &self.identification.service_endpoint
    }

    pub fn name(&self) -> &str {
        &self.identification.conversational_name
    }

    pub fn keywords(&self) -> impl Iterator<Item = &str> {
        self.capabilities
            .iter()
            .flat_map(|c| c.keywords.iter().map(String::as_str))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Identification {
    #[serde(default)]
    pub service_endpoint: String,
    #[serde(default)]
    pub organization: String,
    #[serde(default)]
    pub conversational_name: String,
    #[serde(default)]
    pub service_name: String,
    #[serde(default)]
    pub role: String,
    #[serde(default)]
    pub synopsis: String,
    #[serde(flatten)]
    pub extra: Extensions,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Capability {
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default)]
    pub languages: Vec<String>,
    #[serde(default)]
    pub descriptive_texts: Vec<String>,
    #[serde(default)]
    pub modalities: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_type: Option<String>,
    #[serde(flatten)]
    pub extra: Extensions,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ServicingMode {
    /// The candidate can service the request itself.
    #[default]
    Direct,
    /// The candidate can help find who services the request.
    Indirect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AssistantCandidate {
    #[serde(default)]
    pub conversational_name: String,
    #[serde(default)]
    pub url: String,
    #[serde(default)]
    pub servicing_mode: ServicingMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<u32>,
    #[serde(flatten)]
    pub extra: Extensions,
}

impl AssistantCandidate {
    pub fn new(name: impl Into<String>, url: impl Into<String>, mode: ServicingMode) -> Self {
        Self {
            conversational_name: name.into(),
            url: url.into(),
            servicing_mode: mode,
            score: None,
            extra: Extensions::new(),
        }
    }
}
