//! Response backends.
//!
//! A backend turns the current inbound text (plus conversation history and any
//! whisper context) into a reply. Replies may carry a [`Directive`]: end the
//! conversation, or hand the conversation to a specialist for a capability.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};

use crate::envelope::EventType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HistoryRole {
    Inbound,
    Outbound,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryItem {
    pub speaker_id: String,
    pub text: String,
    pub kind: EventType,
    pub role: HistoryRole,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Directive {
    Bye,
    /// Hand the conversation to whoever serves this capability.
    Delegate(String),
}

impl FromStr for Directive {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "bye" => Ok(Directive::Bye),
            other => match other.strip_prefix("delegate:") {
                Some(cap) if !cap.trim().is_empty() => Ok(Directive::Delegate(cap.trim().to_string())),
                _ => Err(format!(
                    "unknown directive {other:?} (expected \"bye\" or \"delegate:<capability>\")"
                )),
            },
        }
    }
}

impl fmt::Display for Directive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Directive::Bye => f.write_str("bye"),
            Directive::Delegate(c) => write!(f, "delegate:{c}"),
        }
    }
}

impl<'de> Deserialize<'de> for Directive {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl Serialize for Directive {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reply {
    /// May be empty when only the directive matters.
    pub text: String,
    pub directive: Option<Directive>,
}

impl Reply {
    pub fn text(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            directive: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendResult {
    Success(Reply),
    Failure(String),
}

pub trait Backend: Send + Sync {
    fn respond(&self, history: &[HistoryItem], current: &str, whisper: Option<&str>) -> BackendResult;
}

/// Run `backend`, refusing empty input.
pub fn run_backend(
    backend: &dyn Backend,
    history: &[HistoryItem],
    current: &str,
    whisper: Option<&str>,
) -> BackendResult {
    if current.trim().is_empty() {
        return BackendResult::Failure("empty input".to_string());
    }
    backend.respond(history, current, whisper)
}

/// Replies with the inbound text.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoBackend;

impl Backend for EchoBackend {
    fn respond(&self, _: &[HistoryItem], current: &str, _: Option<&str>) -> BackendResult {
        BackendResult::Success(Reply::text(current))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptTurn {
    /// Case-insensitive substring the inbound text must contain.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<String>,
    #[serde(default)]
    pub reply: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub then: Option<Directive>,
}

/// Fixed replies consumed in order.
///
/// The turn to play is the number of inbound turns already in the history,
/// so one backend serves any number of conversations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScriptedBackend {
    pub turns: Vec<ScriptTurn>,
}

impl ScriptedBackend {
    pub fn new(turns: Vec<ScriptTurn>) -> Self {
        Self { turns }
    }
}

impl Backend for ScriptedBackend {
    fn respond(&self, history: &[HistoryItem], current: &str, _: Option<&str>) -> BackendResult {
        let index = history.iter().filter(|h| h.role == HistoryRole::Inbound).count();
        let ended = self.turns[..index.min(self.turns.len())]
            .iter()
            .any(|t| t.then == Some(Directive::Bye));
        let Some(turn) = self.turns.get(index).filter(|_| !ended) else {
            return BackendResult::Failure("script exhausted".to_string());
        };
        if let Some(expect) = &turn.expect {
            if !current.to_lowercase().contains(&expect.to_lowercase()) {
                return BackendResult::Failure(format!("script expected input containing {expect:?}"));
            }
        }
        BackendResult::Success(Reply {
            text: turn.reply.clone(),
            directive: turn.then.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    /// Matches when any keyword occurs in the input as whole words.
    pub keywords: Vec<String>,
    pub reply: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub then: Option<Directive>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    /// Reply when no rule matches; without one the lookup fails.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
}

/// First matching keyword rule wins. No model involved.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleBackend {
    pub rules: RuleSet,
}

impl RuleBackend {
    pub fn new(rules: RuleSet) -> Self {
        Self { rules }
    }
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric() && c != '\'')
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn has_phrase(haystack: &[String], phrase: &str) -> bool {
    let phrase = words(phrase);
    !phrase.is_empty() && haystack.windows(phrase.len()).any(|w| w == phrase.as_slice())
}

impl Backend for RuleBackend {
    fn respond(&self, _: &[HistoryItem], current: &str, whisper: Option<&str>) -> BackendResult {
        let mut input = words(current);
        if let Some(w) = whisper {
            input.extend(words(w));
        }
        let hit = self
            .rules
            .rules
            .iter()
            .find(|r| r.keywords.iter().any(|k| has_phrase(&input, k)));
        match (hit, &self.rules.fallback) {
            (Some(rule), _) => BackendResult::Success(Reply {
                text: rule.reply.clone(),
                directive: rule.then.clone(),
            }),
            (None, Some(fallback)) => BackendResult::Success(Reply::text(fallback.clone())),
            (None, None) => BackendResult::Failure("no rule matched".to_string()),
        }
    }
}

/// How an agent config names its backend.
///
/// As a string: `echo`, `scripted:<path>` or `rules:<path>`. Inline forms
/// `{"scripted": [turns]}` and `{"rules": {...}}` are accepted too.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BackendSpec {
    Named(String),
    Scripted { scripted: Vec<ScriptTurn> },
    Rules { rules: RuleSet },
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec::Named("echo".into())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BackendSpecError {
    #[error("unknown backend {0:?}")]
    Unknown(String),
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing {path}: {message}")]
    Parse { path: String, message: String },
}

impl BackendSpec {
    /// Instantiate, resolving relative file paths against `base`.
    pub fn build(&self, base: &Path) -> Result<Box<dyn Backend>, BackendSpecError> {
        match self {
            BackendSpec::Scripted { scripted } => Ok(Box::new(ScriptedBackend::new(scripted.clone()))),
            BackendSpec::Rules { rules } => Ok(Box::new(RuleBackend::new(rules.clone()))),
            BackendSpec::Named(name) if name == "echo" => Ok(Box::new(EchoBackend)),
            BackendSpec::Named(name) => {
                if let Some(path) = name.strip_prefix("scripted:") {
                    let turns: ScriptFile = load_structured(&base.join(path))?;
                    Ok(Box::new(ScriptedBackend::new(turns.into_turns())))
                } else if let Some(path) = name.strip_prefix("rules:") {
                    let rules: RuleSet = load_structured(&base.join(path))?;
                    Ok(Box::new(RuleBackend::new(rules)))
                } else {
                    Err(BackendSpecError::Unknown(name.clone()))
                }
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScriptFile {
    Bare(Vec<ScriptTurn>),
    Wrapped { turns: Vec<ScriptTurn> },
}

impl ScriptFile {
    fn into_turns(self) -> Vec<ScriptTurn> {
        match self {
            ScriptFile::Bare(t) | ScriptFile::Wrapped { turns: t } => t,
        }
    }
}

/// Read JSON or YAML (chosen by extension, YAML otherwise).
pub(crate) fn load_structured<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, BackendSpecError> {
    let display = path.display().to_string();
    let raw = std::fs::read_to_string(path).map_err(|source| BackendSpecError::Io {
        path: display.clone(),
        source,
    })?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&raw).map_err(|e| e.to_string())
    } else {
        serde_yaml::from_str(&raw).map_err(|e| e.to_string())
    };
    parsed.map_err(|message| BackendSpecError::Parse { path: display, message })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inbound(text: &str) -> HistoryItem {
        HistoryItem {
            speaker_id: "u".into(),
            text: text.into(),
            kind: EventType::Utterance,
            role: HistoryRole::Inbound,
        }
    }

    #[test]
    fn echo() {
        assert_eq!(
            run_backend(&EchoBackend, &[], "hello", None),
            BackendResult::Success(Reply::text("hello"))
        );
    }

    #[test]
    fn empty_input_fails() {
        assert!(matches!(
            run_backend(&EchoBackend, &[], "  ", None),
            BackendResult::Failure(_)
        ));
    }

    #[test]
    fn postal_rules() {
        let rules: RuleSet = serde_yaml::from_str(
            r#"
rules:
  - keywords: ["package", "mail"]
    reply: "Hi Emmett! The cost depends on the shipping service you choose. For example, Priority Mail starts around $8.70. Rates can vary based on dimensions and delivery speed. Need more details?"
  - keywords: ["goodbye"]
    reply: "Goodbye, Emmett."
    then: bye
"#,
        )
        .unwrap();
        let b = RuleBackend::new(rules);
        let BackendResult::Success(r) =
            run_backend(&b, &[], "How much does a 2 LB package going to California cost?", None)
        else {
            panic!("rule should match");
        };
        assert!(r.text.contains("Priority Mail starts around $8.70"));
        let BackendResult::Success(r) = run_backend(&b, &[], "No that's good Thanks. Goodbye.", None) else {
            panic!()
        };
        assert_eq!(r.directive, Some(Directive::Bye));
        assert!(matches!(
            run_backend(&b, &[], "weather?", None),
            BackendResult::Failure(_)
        ));
    }

    #[test]
    fn script_plays_in_order_then_exhausts() {
        let b = ScriptedBackend::new(vec![
            ScriptTurn {
                expect: None,
                reply: "one".into(),
                then: None,
            },
            ScriptTurn {
                expect: Some("TWO".into()),
                reply: "two".into(),
                then: None,
            },
        ]);
        let mut history = vec![];
        assert_eq!(
            b.respond(&history, "x", None),
            BackendResult::Success(Reply::text("one"))
        );
        history.push(inbound("x"));
        assert!(matches!(b.respond(&history, "nope", None), BackendResult::Failure(_)));
        assert_eq!(
            b.respond(&history, "say two", None),
            BackendResult::Success(Reply::text("two"))
        );
        history.push(inbound("say two"));
        assert_eq!(
            b.respond(&history, "more", None),
            BackendResult::Failure("script exhausted".into())
        );
    }

    #[test]
    fn bye_turn_ends_script() {
        let b = ScriptedBackend::new(vec![
            ScriptTurn {
                expect: None,
                reply: "bye".into(),
                then: Some(Directive::Bye),
            },
            ScriptTurn {
                expect: None,
                reply: "unreachable".into(),
                then: None,
            },
        ]);
        assert_eq!(
            b.respond(&[inbound("a")], "b", None),
            BackendResult::Failure("script exhausted".into())
        );
    }

    #[test]
    fn directive_parsing() {
        assert_eq!("delegate:flowers".parse(), Ok(Directive::Delegate("flowers".into())));
        assert_eq!("bye".parse(), Ok(Directive::Bye));
        assert!("jump".parse::<Directive>().is_err());
    }

    #[test]
    fn backend_spec_forms() {
        let s: BackendSpec = serde_json::from_str(r#""echo""#).unwrap();
        assert!(s.build(Path::new(".")).is_ok());
        let s: BackendSpec = serde_json::from_str(r#"{"scripted":[{"reply":"hi"}]}"#).unwrap();
        assert!(matches!(s, BackendSpec::Scripted { .. }));
        let s: BackendSpec = serde_json::from_str(r#""llm:gpt""#).unwrap();
        assert!(matches!(s.build(Path::new(".")), Err(BackendSpecError::Unknown(_))));
    }
}
