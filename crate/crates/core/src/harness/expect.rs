//! Sequence expectations evaluated against the merged transcript.

use serde::{Deserialize, Serialize};

use super::diagram::Arrow;

/// Selects events. Unset fields match anything; participant names also
/// match a human's `<name>-proxy` lifeline.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventPattern {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_type: Option<String>,
    /// Substring of the event's dialog text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contains: Option<String>,
}

fn same_party(pattern: &str, label: &str) -> bool {
    label == pattern || label.strip_suffix("-proxy") == Some(pattern)
}

impl EventPattern {
    pub fn new(from: &str, to: &str, event_type: &str) -> Self {
        Self {
            from: Some(from.into()),
            to: Some(to.into()),
            event_type: Some(event_type.into()),
            contains: None,
        }
    }

    pub fn containing(mut self, s: &str) -> Self {
        self.contains = Some(s.into());
        self
    }

    pub fn matches(&self, a: &Arrow) -> bool {
        self.from.as_deref().is_none_or(|f| same_party(f, &a.from))
            && self.to.as_deref().is_none_or(|t| same_party(t, &a.to))
            && self.event_type.as_deref().is_none_or(|k| k == a.event_type)
            && self
                .contains
                .as_deref()
                .is_none_or(|s| a.text.as_deref().is_some_and(|t| t.contains(s)))
    }

    fn describe(&self) -> String {
        format!(
            "{} {} -> {}{}",
            self.event_type.as_deref().unwrap_or("any event"),
            self.from.as_deref().unwrap_or("*"),
            self.to.as_deref().unwrap_or("*"),
            self.contains
                .as_deref()
                .map(|s| format!(" containing {s:?}"))
                .unwrap_or_default()
        )
    }

    fn parties(&self) -> impl Iterator<Item = &str> {
        self.from.iter().chain(self.to.iter()).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum SequenceExpectation {
    EventOccurs(EventPattern),
    /// The first match of `first` comes before the first match of `then`.
    OrderedBefore {
        first: EventPattern,
        then: EventPattern,
    },
    TextContains {
        #[serde(flatten)]
        pattern: EventPattern,
        substring: String,
    },
    /// After every delegate bye to `agent`, the next turn is served by
    /// `agent` itself and nothing more is sent to that delegate until it is
    /// invited again.
    FloorReturnsTo {
        agent: String,
        speaker_id: Option<String>,
    },
    /// `mediator` runs exactly `count` delegation segments, each opened by
    /// one invite and closed by one bye.
    DelegationSegments {
        mediator: String,
        count: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectationResult {
    pub description: String,
    pub passed: bool,
    pub detail: String,
    /// Transcript lines the verdict rests on.
    pub lines: Vec<usize>,
}

/// A delegate's stretch of the conversation: invite at `open`, bye at `close`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub delegate: String,
    pub open: usize,
    pub close: Option<usize>,
}

fn is_agent(name: &str, humans: &[String]) -> bool {
    !humans.iter().any(|h| same_party(h, name))
}

/// Delegation segments of `mediator`, in order. Indices are into `arrows`.
pub fn segments(arrows: &[Arrow], mediator: &str, humans: &[String]) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::new();
    for (i, a) in arrows.iter().enumerate() {
        if a.from == mediator && a.event_type == "invite" && is_agent(&a.to, humans) {
            out.push(Segment {
                delegate: a.to.clone(),
                open: i,
                close: None,
            });
        } else if a.to == mediator && a.event_type == "bye" {
            if let Some(s) = out.iter_mut().rev().find(|s| s.delegate == a.from && s.close.is_none()) {
                s.close = Some(i);
            }
        }
    }
    out
}

impl SequenceExpectation {
    pub fn describe(&self) -> String {
        match self {
            SequenceExpectation::EventOccurs(p) => format!("occurs: {}", p.describe()),
            SequenceExpectation::OrderedBefore { first, then } => {
                format!("ordered: {} before {}", first.describe(), then.describe())
            }
            SequenceExpectation::TextContains { pattern, substring } => {
                format!("text: {} contains {substring:?}", pattern.describe())
            }
            SequenceExpectation::FloorReturnsTo { agent, .. } => format!("floor returns to {agent} after every bye"),
            SequenceExpectation::DelegationSegments { mediator, count } => {
                format!("{mediator} runs {count} bracketed delegation segments")
            }
        }
    }

    /// Participant names this expectation refers to.
    pub fn parties(&self) -> Vec<&str> {
        match self {
            SequenceExpectation::EventOccurs(p) => p.parties().collect(),
            SequenceExpectation::OrderedBefore { first, then } => first.parties().chain(then.parties()).collect(),
            SequenceExpectation::TextContains { pattern, .. } => pattern.parties().collect(),
            SequenceExpectation::FloorReturnsTo { agent, .. } => vec![agent],
            SequenceExpectation::DelegationSegments { mediator, .. } => vec![mediator],
        }
    }

    /// `humans` names the human participants, whose lifelines are not
    /// delegates.
    pub fn evaluate(&self, arrows: &[Arrow], humans: &[String]) -> ExpectationResult {
        let (passed, detail, lines) = match self {
            SequenceExpectation::EventOccurs(p) => match arrows.iter().find(|a| p.matches(a)) {
                Some(a) => (true, format!("found at line {}", a.line), vec![a.line]),
                None => (false, "no matching event".to_string(), vec![]),
            },
            SequenceExpectation::OrderedBefore { first, then } => {
                let a = arrows.iter().position(|x| first.matches(x));
                let b = arrows.iter().position(|x| then.matches(x));
                match (a, b) {
                    (Some(a), Some(b)) if a < b => (
                        true,
                        format!("lines {} < {}", arrows[a].line, arrows[b].line),
                        vec![arrows[a].line, arrows[b].line],
                    ),
                    (Some(a), Some(b)) => (
                        false,
                        format!(
                            "first match at line {} is not before line {}",
                            arrows[a].line, arrows[b].line
                        ),
                        vec![arrows[a].line, arrows[b].line],
                    ),
                    (None, _) => (false, "first event never occurs".to_string(), vec![]),
                    (_, None) => (false, "second event never occurs".to_string(), vec![]),
                }
            }
            SequenceExpectation::TextContains { pattern, substring } => {
                let p = pattern.clone().containing(substring);
                match arrows.iter().find(|a| p.matches(a)) {
                    Some(a) => (true, format!("found at line {}", a.line), vec![a.line]),
                    None => {
                        let near: Vec<usize> = arrows.iter().filter(|a| pattern.matches(a)).map(|a| a.line).collect();
                        (false, format!("no matching event contains {substring:?}"), near)
                    }
                }
            }
            SequenceExpectation::FloorReturnsTo { agent, speaker_id } => {
                floor_returns(arrows, agent, speaker_id.as_deref().unwrap_or(agent), humans)
            }
            SequenceExpectation::DelegationSegments { mediator, count } => {
                delegation_segments(arrows, mediator, *count, humans)
            }
        };
        ExpectationResult {
            description: self.describe(),
            passed,
            detail,
            lines,
        }
    }
}

fn floor_returns(arrows: &[Arrow], agent: &str, speaker: &str, humans: &[String]) -> (bool, String, Vec<usize>) {
    let segs = segments(arrows, agent, humans);
    if segs.is_empty() {
        return (false, format!("{agent} never delegated"), vec![]);
    }
    let mut lines = Vec::new();
    for s in &segs {
        let Some(close) = s.close else {
            return (
                false,
                format!("{} never said bye", s.delegate),
                vec![arrows[s.open].line],
            );
        };
        lines.push(arrows[close].line);
        let reinvite = arrows[close..]
            .iter()
            .position(|a| a.from == agent && a.to == s.delegate && a.event_type == "invite")
            .map_or(arrows.len(), |p| close + p);
        if let Some(a) = arrows[close..reinvite]
            .iter()
            .find(|a| a.from == agent && a.to == s.delegate)
        {
            return (
                false,
                format!("{agent} kept sending {} to {} after its bye", a.event_type, s.delegate),
                vec![arrows[close].line, a.line],
            );
        }
        let back = arrows[close..].iter().find(|a| {
            a.from == agent
                && !is_agent(&a.to, humans)
                && a.event_type == "utterance"
                && a.speaker_id.as_deref() == Some(speaker)
        });
        match back {
            Some(a) => lines.push(a.line),
            None => {
                return (
                    false,
                    format!("{agent} did not speak to the human after {}'s bye", s.delegate),
                    vec![arrows[close].line],
                )
            }
        }
    }
    (true, format!("{} byes, each followed by {agent}", segs.len()), lines)
}

fn delegation_segments(
    arrows: &[Arrow],
    mediator: &str,
    count: usize,
    humans: &[String],
) -> (bool, String, Vec<usize>) {
    let segs = segments(arrows, mediator, humans);
    let lines: Vec<usize> = segs
        .iter()
        .flat_map(|s| std::iter::once(arrows[s.open].line).chain(s.close.map(|c| arrows[c].line)))
        .collect();
    if let Some(s) = segs.iter().find(|s| s.close.is_none()) {
        return (false, format!("segment with {} has no bye", s.delegate), lines);
    }
    let byes = arrows
        .iter()
        .filter(|a| a.to == mediator && a.event_type == "bye" && is_agent(&a.from, humans))
        .count();
    if byes != segs.len() {
        return (false, format!("{byes} byes for {} invites", segs.len()), lines);
    }
    if segs.len() != count {
        return (false, format!("{} segments, expected {count}", segs.len()), lines);
    }
    let names: Vec<&str> = segs.iter().map(|s| s.delegate.as_str()).collect();
    (true, format!("segments: {}", names.join(", ")), lines)
}
