use chrono::{SecondsFormat, Utc};

/// Source of `span.startTime` stamps.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum Clock {
    #[default]
    System,
    /// Every stamp is this string; used for byte-stable scenario runs.
    Frozen(String),
}

impl Clock {
    pub fn now(&self) -> String {
        match self {
            Clock::System => Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            Clock::Frozen(s) => s.clone(),
        }
    }
}

/// Stamp used by `--freeze-time`.
pub const FROZEN_TIME: &str = "2024-07-13T19:18:25.855Z";
