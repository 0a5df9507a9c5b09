use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::transport::{Direction, TranscriptEntry};

/// One event as an arrow between two participants.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Arrow {
    /// 1-based line of the transcript entry carrying the event.
    pub line: usize,
    pub from: String,
    pub to: String,
    pub event_type: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub speaker_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

/// Maps agent endpoints to agent names, learned from the `sender.from` of
/// each agent's outbound envelopes.
pub fn endpoint_names(entries: &[TranscriptEntry]) -> HashMap<String, String> {
    entries
        .iter()
        .filter(|e| e.direction == Direction::Out)
        .filter_map(|e| {
            let from = e.envelope["ovon"]["sender"]["from"].as_str()?;
            Some((from.to_string(), e.agent.clone()))
        })
        .collect()
}

fn dialog_text(event: &Value) -> Option<String> {
    let features = event["parameters"]["dialogEvent"]["features"].as_object()?;
    let tokens = features.get("text")?["tokens"].as_array()?;
    Some(
        tokens
            .iter()
            .filter_map(|t| t["value"].as_str())
            .collect::<Vec<_>>()
            .join(" "),
    )
}

/// Every event of every entry, in transcript order.
pub fn arrows(entries: &[TranscriptEntry]) -> Vec<Arrow> {
    let names = endpoint_names(entries);
    let label = |s: &str| names.get(s).cloned().unwrap_or_else(|| s.to_string());
    let mut out = Vec::new();
    for (i, entry) in entries.iter().enumerate() {
        let (from, to) = entry.arrow();
        let (from, to) = (label(from), label(to));
        for (kind, event) in entry.events() {
            out.push(Arrow {
                line: i + 1,
                from: from.clone(),
                to: to.clone(),
                event_type: kind.to_string(),
                speaker_id: event["parameters"]["dialogEvent"]["speakerId"]
                    .as_str()
                    .map(str::to_string),
                text: dialog_text(event),
            });
        }
    }
    out
}

/// Participants in order of first appearance.
pub fn lifelines(arrows: &[Arrow]) -> Vec<String> {
    let mut seen = Vec::new();
    for a in arrows {
        for p in [&a.from, &a.to] {
            if !seen.contains(p) {
                seen.push(p.clone());
            }
        }
    }
    seen
}

fn alias(index: usize) -> String {
    format!("P{index}")
}

/// PlantUML source: one participant per lifeline and one
/// `A -> B : eventType` line per event.
pub fn export_sequence_diagram(entries: &[TranscriptEntry]) -> String {
    let arrows = arrows(entries);
    let lines = lifelines(&arrows);
    let index: HashMap<&str, usize> = lines.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();

    let mut out = String::from("@startuml\n");
    for (i, p) in lines.iter().enumerate() {
        let _ = writeln!(out, "participant \"{}\" as {}", p.replace('"', "'"), alias(i));
    }
    for a in &arrows {
        let _ = writeln!(
            out,
            "{} -> {} : {}",
            alias(index[a.from.as_str()]),
            alias(index[a.to.as_str()]),
            a.event_type
        );
    }
    out.push_str("@enduml\n");
    out
}
