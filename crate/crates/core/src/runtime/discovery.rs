//! Demanding side of discovery: fetching manifests and searching registries,
//! with bounded resends and bounded referral chains.

use std::collections::{HashSet, VecDeque};
use std::time::Duration;

use crate::clock::Clock;
use crate::envelope::{
    AssistantCandidate, AssistantManifest, ConversationEnvelope, DialogEvent, EnvelopeEvent, EventType, ServicingMode,
};
use crate::fsm::{discovery_step, DiscoveryState, FsmAction, FsmInput, StepRecord};
use crate::transport::{Transport, TransportError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscoveryPolicy {
    pub resend_period: Duration,
    pub max_resends: u32,
    /// Referral hops followed from the first registry.
    pub max_referral_depth: usize,
    pub send_timeout: Duration,
}

impl Default for DiscoveryPolicy {
    fn default() -> Self {
        Self {
            resend_period: Duration::from_secs(5),
            max_resends: 3,
            max_referral_depth: 3,
            send_timeout: Duration::from_secs(10),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DiscoveryError {
    #[error("no answer from {url} after {attempts} attempts: {last}")]
    Failed {
        url: String,
        attempts: u32,
        #[source]
        last: TransportError,
    },
    #[error("{url} answered without the expected {expected} event")]
    UnexpectedResponse { url: String, expected: EventType },
    #[error("referral loop: every suggested registry was already asked ({visited:?})")]
    ReferralLoop { visited: Vec<String> },
    #[error("referral chain exceeded depth {depth}")]
    DepthExceeded { depth: usize },
    #[error("no assistant found")]
    NoCandidates,
}

/// Runs discovery exchanges for one conversation and keeps a step trace.
pub struct DiscoveryClient<'a> {
    transport: &'a dyn Transport,
    from: String,
    speaker: String,
    conversation_id: String,
    clock: Clock,
    policy: DiscoveryPolicy,
    /// Registries queried during the last search, in order.
    pub queried: Vec<String>,
    pub trace: Vec<StepRecord<DiscoveryState>>,
}

impl<'a> DiscoveryClient<'a> {
    pub fn new(
        transport: &'a dyn Transport,
        from: impl Into<String>,
        conversation_id: impl Into<String>,
        policy: DiscoveryPolicy,
    ) -> Self {
        let from = from.into();
        Self {
            transport,
            speaker: from.clone(),
            from,
            conversation_id: conversation_id.into(),
            clock: Clock::System,
            policy,
            queried: Vec::new(),
            trace: Vec::new(),
        }
    }

    pub fn with_speaker(mut self, speaker: impl Into<String>) -> Self {
        self.speaker = speaker.into();
        self
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    fn step(&mut self, state: DiscoveryState, input: FsmInput) -> (DiscoveryState, FsmAction) {
        let t = discovery_step(state, input);
        if let Some(w) = &t.warning {
            tracing::warn!("{w}");
        }
        self.trace.push(StepRecord {
            from: state,
            input,
            to: t.state,
            action: t.action,
        });
        (t.state, t.action)
    }

    /// Send `env` until a reply carrying `expected` arrives or resends run out.
    async fn exchange(
        &mut self,
        url: &str,
        env: &ConversationEnvelope,
        mut state: DiscoveryState,
        expected: EventType,
    ) -> Result<(ConversationEnvelope, DiscoveryState), DiscoveryError> {
        let mut attempts = 0;
        loop {
            attempts += 1;
            let outcome = tokio::time::timeout(self.policy.send_timeout, self.transport.send(url, env)).await;
            let err = match outcome {
                Ok(Ok(reply)) if reply.has_event(expected) => return Ok((reply, state)),
                Ok(Ok(_)) => {
                    return Err(DiscoveryError::UnexpectedResponse {
                        url: url.to_string(),
                        expected,
                    })
                }
                Ok(Err(e)) => e,
                Err(_) => TransportError::Timeout(url.to_string()),
            };
            if attempts > self.policy.max_resends {
                return Err(DiscoveryError::Failed {
                    url: url.to_string(),
                    attempts,
                    last: err,
                });
            }
            tokio::time::sleep(self.policy.resend_period).await;
            let (next, _resend) = self.step(state, FsmInput::ResendTick);
            state = next;
        }
    }

    fn envelope(&self, event: EnvelopeEvent) -> ConversationEnvelope {
        ConversationEnvelope::new(&self.conversation_id, &self.from).with_event(event)
    }

    /// `requestManifest` to `url`, waiting for `publishManifest`.
    pub async fn request_manifest(&mut self, url: &str) -> Result<AssistantManifest, DiscoveryError> {
        let env = self.envelope(EnvelopeEvent::request_manifest().addressed_to(url));
        let (state, _) = self.step(DiscoveryState::CapabilitySearch, FsmInput::SentRequestManifest);
        let (reply, state) = self.exchange(url, &env, state, EventType::PublishManifest).await?;
        self.step(state, FsmInput::ReceivedPublishManifest);
        let manifest = reply
            .events_of(EventType::PublishManifest)
            .find_map(|e| e.manifest().cloned());
        manifest.ok_or(DiscoveryError::UnexpectedResponse {
            url: url.to_string(),
            expected: EventType::PublishManifest,
        })
    }

    /// `findAssistant` starting at `registry`, following indirect referrals
    /// breadth-first up to the policy depth. Returns direct candidates.
    pub async fn find_assistants(
        &mut self,
        registry: &str,
        query: &str,
    ) -> Result<Vec<AssistantCandidate>, DiscoveryError> {
        self.queried.clear();
        let mut visited: HashSet<String> = HashSet::new();
        let mut frontier: VecDeque<(String, usize)> = VecDeque::from([(registry.to_string(), 0)]);
        let mut saw_loop = false;
        let mut saw_depth = false;
        let mut state = DiscoveryState::AssistantSearch;

        while let Some((url, depth)) = frontier.pop_front() {
            if !visited.insert(url.clone()) {
                saw_loop = true;
                continue;
            }
            if depth > self.policy.max_referral_depth {
                saw_depth = true;
                continue;
            }
            self.queried.push(url.clone());
            let dialog = DialogEvent::text_from(&self.speaker, query);
            let env = self.envelope(EnvelopeEvent::find_assistant(dialog, &self.clock).addressed_to(&url));
            let (s, _) = self.step(state, FsmInput::SentFindAssistant);
            let (reply, s) = self.exchange(&url, &env, s, EventType::ProposeAssistant).await?;
            state = s;

            let candidates: Vec<AssistantCandidate> = reply
                .events_of(EventType::ProposeAssistant)
                .flat_map(|e| e.candidates().iter().cloned())
                .collect();
            let direct: Vec<_> = candidates
                .iter()
                .filter(|c| c.servicing_mode == ServicingMode::Direct)
                .cloned()
                .collect();
            if !direct.is_empty() {
                self.step(state, FsmInput::ReceivedProposeAssistant(ServicingMode::Direct));
                return Ok(direct);
            }
            let (s, _query_suggested) = self.step(state, FsmInput::ReceivedProposeAssistant(ServicingMode::Indirect));
            state = s;
            for c in candidates {
                if visited.contains(&c.url) || c.url == self.from {
                    saw_loop = true;
                } else {
                    frontier.push_back((c.url, depth + 1));
                }
            }
        }

        if saw_loop {
            Err(DiscoveryError::ReferralLoop {
                visited: self.queried.clone(),
            })
        } else if saw_depth {
            Err(DiscoveryError::DepthExceeded {
                depth: self.policy.max_referral_depth,
            })
        } else {
            Err(DiscoveryError::NoCandidates)
        }
    }
}
