//! Manifest registry and keyword matching for assistant discovery.
//!
//! Matching is a bag-of-words overlap. A query scores one point per registry
//! tag (lowercased capability keyword) that appears in it as a whole word, and
//! one extra point when any other word of at least four letters from the
//! capability descriptions appears. Zero-score entries are dropped; the rest
//! are ordered by score descending, then conversational name ascending.

use std::collections::BTreeSet;
use std::sync::RwLock;

use chrono::{DateTime, Utc};
use indexmap::IndexMap;

use crate::envelope::{
    validate_manifest, AssistantCandidate, AssistantManifest, ConversationEnvelope, EnvelopeEvent, EventType, Schema,
    ServicingMode, Violation,
};

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("invalid manifest: {0:?}")]
    InvalidManifest(Vec<Violation>),
    #[error("registry does not handle {0} events")]
    UnsupportedEvent(EventType),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistryEntry {
    pub manifest: AssistantManifest,
    pub registered_at: DateTime<Utc>,
    pub tags: BTreeSet<String>,
}

impl RegistryEntry {
    pub fn new(manifest: AssistantManifest) -> Self {
        let tags = manifest.keywords().map(str::to_lowercase).collect();
        Self {
            manifest,
            registered_at: Utc::now(),
            tags,
        }
    }

    fn speaks(&self, language: &str) -> bool {
        let language = language.to_lowercase();
        self.manifest.capabilities.iter().any(|c| {
            c.languages.is_empty()
                || c.languages.iter().any(|l| {
                    let l = l.to_lowercase();
                    l == language || l.starts_with(&format!("{language}-")) || language.starts_with(&format!("{l}-"))
                })
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchQuery {
    pub text: String,
    pub language: Option<String>,
}

impl MatchQuery {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            language: None,
        }
    }
}

fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn contains_phrase(haystack: &[String], phrase: &[String]) -> bool {
    !phrase.is_empty() && haystack.windows(phrase.len()).any(|w| w == phrase)
}

/// Overlap score of one entry against query words.
pub fn score_entry(query_words: &[String], entry: &RegistryEntry) -> u32 {
    let mut score = 0;
    let mut tag_words = BTreeSet::new();
    for tag in &entry.tags {
        let phrase = words(tag);
        if contains_phrase(query_words, &phrase) {
            score += 1;
        }
        tag_words.extend(phrase);
    }
    let described = entry
        .manifest
        .capabilities
        .iter()
        .flat_map(|c| c.descriptive_texts.iter())
        .flat_map(|t| words(t))
        .filter(|w| w.chars().count() >= 4 && !tag_words.contains(w))
        .any(|w| query_words.contains(&w));
    if described {
        score += 1;
    }
    score
}

/// Rank `entries` against `query`; see the module docs for the rule.
pub fn score_candidates(query: &MatchQuery, entries: &[RegistryEntry]) -> Vec<AssistantCandidate> {
    let query_words = words(&query.text);
    let mut scored: Vec<(u32, &RegistryEntry)> = entries
        .iter()
        .filter(|e| query.language.as_deref().is_none_or(|l| e.speaks(l)))
        .map(|e| (score_entry(&query_words, e), e))
        .filter(|(s, _)| *s > 0)
        .collect();
    scored.sort_by(|(sa, a), (sb, b)| {
        sb.cmp(sa)
            .then_with(|| a.manifest.name().cmp(b.manifest.name()))
            .then_with(|| a.manifest.endpoint().cmp(b.manifest.endpoint()))
    });
    scored
        .into_iter()
        .map(|(score, e)| {
            let mut c = AssistantCandidate::new(e.manifest.name(), e.manifest.endpoint(), ServicingMode::Direct);
            c.score = Some(score);
            c
        })
        .collect()
}

/// Another registry this one can refer requesters to.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PeerRegistry {
    pub name: String,
    pub url: String,
}

/// A discovery agent: its own manifest, the manifests it knows, and peer
/// registries for indirect referrals.
#[derive(Debug)]
pub struct Registry {
    endpoint: String,
    own: RegistryEntry,
    entries: RwLock<IndexMap<String, RegistryEntry>>,
    peers: Vec<PeerRegistry>,
    emit_scores: bool,
}

impl Registry {
    pub fn new(endpoint: impl Into<String>, own: AssistantManifest) -> Result<Self, RegistryError> {
        let violations = validate_manifest(&own);
        if !violations.is_empty() {
            return Err(RegistryError::InvalidManifest(violations));
        }
        Ok(Self {
            endpoint: endpoint.into(),
            own: RegistryEntry::new(own),
            entries: RwLock::new(IndexMap::new()),
            peers: Vec::new(),
            emit_scores: false,
        })
    }

    pub fn with_peers(mut self, peers: impl IntoIterator<Item = PeerRegistry>) -> Self {
        self.peers.extend(peers);
        self
    }

    /// Include match scores in proposed candidates.
    pub fn with_scores(mut self, emit: bool) -> Self {
        self.emit_scores = emit;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn own_manifest(&self) -> &AssistantManifest {
        &self.own.manifest
    }

    /// Store `m`, replacing any entry with the same service endpoint.
    pub fn register_manifest(&self, m: AssistantManifest) -> Result<RegistryEntry, RegistryError> {
        let violations = validate_manifest(&m);
        if !violations.is_empty() {
            return Err(RegistryError::InvalidManifest(violations));
        }
        let entry = RegistryEntry::new(m);
        let mut entries = self.entries.write().expect("registry lock poisoned");
        entries.insert(entry.manifest.endpoint().to_string(), entry.clone());
        Ok(entry)
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("registry lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn entries(&self) -> Vec<RegistryEntry> {
        self.entries
            .read()
            .expect("registry lock poisoned")
            .values()
            .cloned()
            .collect()
    }

    fn lookup_manifest(&self, target: Option<&str>) -> AssistantManifest {
        let Some(target) = target else {
            return self.own.manifest.clone();
        };
        if target == self.endpoint || target == self.own.manifest.endpoint() {
            return self.own.manifest.clone();
        }
        let entries = self.entries.read().expect("registry lock poisoned");
        entries
            .get(target)
            .or_else(|| entries.values().find(|e| e.manifest.endpoint().starts_with(target)))
            .map(|e| e.manifest.clone())
            .unwrap_or_else(|| self.own.manifest.clone())
    }

    /// Direct candidates for `query`, this registry included when it matches.
    pub fn find(&self, query: &MatchQuery) -> Vec<AssistantCandidate> {
        let mut pool = self.entries();
        if !pool
            .iter()
            .any(|e| e.manifest.endpoint() == self.own.manifest.endpoint())
        {
            pool.push(self.own.clone());
        }
        score_candidates(query, &pool)
    }

    fn referrals(&self, requester: &str) -> Vec<AssistantCandidate> {
        self.peers
            .iter()
            .filter(|p| p.url != requester && p.url != self.endpoint)
            .map(|p| AssistantCandidate::new(&p.name, &p.url, ServicingMode::Indirect))
            .collect()
    }

    /// Answer `requestManifest` and `findAssistant` events.
    pub fn handle_discovery_envelope(&self, env: &ConversationEnvelope) -> Result<ConversationEnvelope, RegistryError> {
        let mut events = Vec::new();
        for event in &env.events {
            match event.event_type {
                EventType::RequestManifest => {
                    let m = self.lookup_manifest(env.recipient_of(event));
                    events.push(EnvelopeEvent::publish_manifest(m));
                }
                EventType::FindAssistant => {
                    let text = event.text().unwrap_or_default();
                    let mut candidates = self.find(&MatchQuery::new(text));
                    if candidates.is_empty() {
                        candidates = self.referrals(&env.sender.from);
                    }
                    if !self.emit_scores {
                        candidates.iter_mut().for_each(|c| c.score = None);
                    }
                    events.push(EnvelopeEvent::propose_assistant(candidates));
                }
                _ => {}
            }
        }
        if events.is_empty() {
            let kind = env.events.first().map_or(EventType::Utterance, |e| e.event_type);
            return Err(RegistryError::UnsupportedEvent(kind));
        }
        Ok(ConversationEnvelope {
            schema: Schema {
                version: env.schema.version.clone(),
                url: env.schema.url.clone(),
                ..Schema::default()
            },
            ..ConversationEnvelope::new(env.conversation_id(), &self.endpoint)
        }
        .with_sender_to(&env.sender.from)
        .with_events(events))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::{parse_manifest, Capability, Identification};

    fn manifest(name: &str, url: &str, keywords: &[&str], desc: &str) -> AssistantManifest {
        AssistantManifest {
            identification: Identification {
                service_endpoint: url.into(),
                conversational_name: name.into(),
                ..Default::default()
            },
            capabilities: vec![Capability {
                keywords: keywords.iter().map(|s| s.to_string()).collect(),
                languages: vec!["en-us".into()],
                descriptive_texts: vec![desc.into()],
                ..Default::default()
            }],
            extra: Default::default(),
        }
    }

    fn listing4() -> AssistantManifest {
        parse_manifest(include_str!("../../../corpus/listing4.json")).unwrap()
    }

    #[test]
    fn listing4_tags() {
        let r = Registry::new(
            "https://andres",
            manifest("andres", "https://andres", &["discovery"], ""),
        )
        .unwrap();
        let e = r.register_manifest(listing4()).unwrap();
        let expected: BTreeSet<String> = ["books", "authors", "isbn", "editors"]
            .into_iter()
            .map(String::from)
            .collect();
        assert_eq!(e.tags, expected);
    }

    #[test]
    fn reregistering_replaces() {
        let r = Registry::new(
            "https://andres",
            manifest("andres", "https://andres", &["discovery"], ""),
        )
        .unwrap();
        r.register_manifest(listing4()).unwrap();
        r.register_manifest(listing4()).unwrap();
        assert_eq!(r.len(), 1);
    }

    #[test]
    fn empty_keywords_rejected() {
        let r = Registry::new(
            "https://andres",
            manifest("andres", "https://andres", &["discovery"], ""),
        )
        .unwrap();
        let mut m = listing4();
        m.capabilities[0].keywords.clear();
        assert!(matches!(r.register_manifest(m), Err(RegistryError::InvalidManifest(_))));
    }

    #[test]
    fn empty_registry_scores_nothing() {
        assert!(score_candidates(&MatchQuery::new("books"), &[]).is_empty());
    }

    #[test]
    fn multi_word_keywords_match_as_phrases() {
        let e = RegistryEntry::new(manifest("x", "https://x", &["Post Office"], ""));
        assert_eq!(score_entry(&words("where is the post office?"), &e), 1);
        assert_eq!(score_entry(&words("office post"), &e), 0);
    }

    #[test]
    fn language_filter() {
        let e = RegistryEntry::new(manifest("x", "https://x", &["books"], ""));
        let mut q = MatchQuery::new("books");
        q.language = Some("en".into());
        assert_eq!(score_candidates(&q, std::slice::from_ref(&e)).len(), 1);
        q.language = Some("et".into());
        assert!(score_candidates(&q, &[e]).is_empty());
    }

    #[test]
    fn utterance_is_unsupported() {
        use crate::envelope::DialogEvent;
        let r = Registry::new(
            "https://andres",
            manifest("andres", "https://andres", &["discovery"], ""),
        )
        .unwrap();
        let env = ConversationEnvelope::new("c", "https://juri").with_event(EnvelopeEvent::utterance(
            DialogEvent::text_from("juri", "hello"),
            &crate::Clock::System,
        ));
        assert!(matches!(
            r.handle_discovery_envelope(&env),
            Err(RegistryError::UnsupportedEvent(EventType::Utterance))
        ));
    }
}
