//! Append-only transcripts, one JSON object per line.
//!
//! Each line records one envelope as seen by the agent that handled it:
//! `{"seq", "agent", "direction", "peer", "conversationId", "wallTime",
//! "envelope"}`. Files live at `<dir>/<conversation_id>.jsonl`.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::clock::Clock;
use crate::envelope::{envelope_to_value, ConversationEnvelope};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    In,
    Out,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TranscriptEntry {
    pub seq: u64,
    /// Agent that recorded the entry.
    pub agent: String,
    pub direction: Direction,
    pub peer: String,
    pub conversation_id: String,
    pub wall_time: String,
    pub envelope: Value,
}

impl TranscriptEntry {
    /// The entry with timestamps removed, for run-to-run comparison.
    pub fn without_times(&self) -> TranscriptEntry {
        let mut e = self.clone();
        e.wall_time.clear();
        strip_start_times(&mut e.envelope);
        e
    }

    /// `(from, to)` of the arrow this entry represents.
    pub fn arrow(&self) -> (&str, &str) {
        match self.direction {
            Direction::In => (&self.peer, &self.agent),
            Direction::Out => (&self.agent, &self.peer),
        }
    }

    /// `(eventType, event)` pairs in wire order.
    pub fn events(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.envelope["ovon"]["events"]
            .as_array()
            .into_iter()
            .flatten()
            .map(|e| (e["eventType"].as_str().unwrap_or(""), e))
    }
}

fn strip_start_times(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.shift_remove("startTime");
            map.values_mut().for_each(strip_start_times);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_start_times),
        _ => {}
    }
}

#[derive(Debug, thiserror::Error)]
#[error("transcript write to {path}: {source}")]
pub struct TranscriptError {
    pub path: String,
    #[source]
    pub source: std::io::Error,
}

/// Shared sink for transcript entries.
///
/// Entries are numbered by one monotonic counter, so a log shared by several
/// agents yields a single merged order. With a directory configured, every
/// entry is also appended to that conversation's file.
#[derive(Debug, Default)]
pub struct TranscriptLog {
    dir: Option<PathBuf>,
    clock: Clock,
    seq: AtomicU64,
    entries: Mutex<Vec<TranscriptEntry>>,
}

impl TranscriptLog {
    pub fn in_memory() -> Arc<Self> {
        Arc::new(Self::default())
    }

    pub fn with_dir(dir: impl Into<PathBuf>) -> Arc<Self> {
        Arc::new(Self {
            dir: Some(dir.into()),
            ..Self::default()
        })
    }

    /// A log stamping `wallTime` from `clock`.
    pub fn new(dir: Option<PathBuf>, clock: Clock) -> Arc<Self> {
        Arc::new(Self {
            dir,
            clock,
            ..Self::default()
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Record `envelope` as handled by `agent`.
    pub fn record(
        &self,
        agent: &str,
        direction: Direction,
        peer: &str,
        envelope: &ConversationEnvelope,
    ) -> Result<TranscriptEntry, TranscriptError> {
        let entry = TranscriptEntry {
            seq: 0,
            agent: agent.to_string(),
            direction,
            peer: peer.to_string(),
            conversation_id: envelope.conversation_id().to_string(),
            wall_time: self.clock.now(),
            envelope: envelope_to_value(envelope),
        };
        self.persist_transcript(entry)
    }

    /// Number and append `entry`; the stored copy is returned.
    pub fn persist_transcript(&self, mut entry: TranscriptEntry) -> Result<TranscriptEntry, TranscriptError> {
        let mut entries = self.entries.lock().expect("transcript lock poisoned");
        entry.seq = self.seq.fetch_add(1, Ordering::SeqCst);
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{}.jsonl", file_stem(&entry.conversation_id)));
            let err = |source| TranscriptError {
                path: path.display().to_string(),
                source,
            };
            std::fs::create_dir_all(dir).map_err(err)?;
            let mut file = OpenOptions::new().create(true).append(true).open(&path).map_err(err)?;
            let line = serde_json::to_string(&entry).expect("entries serialize");
            writeln!(file, "{line}").map_err(err)?;
        }
        entries.push(entry.clone());
        Ok(entry)
    }

    /// All entries in record order.
    pub fn entries(&self) -> Vec<TranscriptEntry> {
        self.entries.lock().expect("transcript lock poisoned").clone()
    }

    pub fn conversation(&self, conversation_id: &str) -> Vec<TranscriptEntry> {
        self.entries
            .lock()
            .expect("transcript lock poisoned")
            .iter()
            .filter(|e| e.conversation_id == conversation_id)
            .cloned()
            .collect()
    }
}

/// Conversation ids are used as file names; anything outside
/// `[A-Za-z0-9._-]` becomes `_`.
pub fn file_stem(conversation_id: &str) -> String {
    conversation_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Read a JSONL transcript file.
pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptEntry>, std::io::Error> {
    let raw = std::fs::read_to_string(path)?;
    raw.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e)))
        .collect()
}
