use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::diagram::arrows;
use super::expect::{ExpectationResult, SequenceExpectation};
use crate::clock::{Clock, FROZEN_TIME};
use crate::config::{AgentConfig, AgentRole, BuildContext, ConfigError};
use crate::envelope::{ConversationEnvelope, DialogEvent, EnvelopeEvent};
use crate::runtime::backend::load_structured;
use crate::runtime::DiscoveryPolicy;
use crate::transport::{Host, LoopbackTransport, TranscriptEntry, TranscriptLog, Transport, TransportError};

/// A human taking part through a proxy that posts their turns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker_id: Option<String>,
    /// Agent the proxy posts to; defaults to the first mediator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub talks_to: Option<String>,
}

impl HumanSpec {
    /// `sender.from` of the proxy, also its lifeline name.
    pub fn proxy(&self) -> String {
        format!("{}-proxy", self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnSpec {
    pub actor: String,
    #[serde(default)]
    pub say: String,
    /// Append a bye after the utterance (or alone when `say` is empty).
    #[serde(default)]
    pub bye: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub agents: Vec<AgentConfig>,
    #[serde(default)]
    pub humans: Vec<HumanSpec>,
    #[serde(default)]
    pub turns: Vec<TurnSpec>,
    #[serde(default)]
    pub expectations: Vec<SequenceExpectation>,
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("scenario setup failed: {0}")]
    ScenarioSetupFailure(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("turn {turn} by {actor} failed: {source}")]
    TurnFailed {
        turn: usize,
        actor: String,
        #[source]
        source: TransportError,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub passed: bool,
    pub conversations: Vec<String>,
    pub transcript_lines: usize,
    pub results: Vec<ExpectationResult>,
    /// Merged transcript, in the order its lines are numbered.
    #[serde(skip)]
    pub transcript: Vec<TranscriptEntry>,
}

impl ScenarioReport {
    pub fn failures(&self) -> usize {
        self.results.iter().filter(|r| !r.passed).count()
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Relative backend and manifest paths in agent configs resolve here.
    pub base_dir: PathBuf,
    pub freeze_time: bool,
    /// Write `<conversation>.jsonl` files here.
    pub transcript_dir: Option<PathBuf>,
    pub discovery: DiscoveryPolicy,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            base_dir: PathBuf::from("."),
            freeze_time: false,
            transcript_dir: None,
            discovery: DiscoveryPolicy::default(),
        }
    }
}

pub fn load_scenario(path: &Path) -> Result<ScenarioSpec, HarnessError> {
    load_structured(path).map_err(|e| HarnessError::ScenarioSetupFailure(e.to_string()))
}

impl ScenarioSpec {
    /// Humans with defaults filled in: every actor missing from `humans` is
    /// added, talking to the first mediator.
    fn resolved_humans(&self) -> Result<Vec<HumanSpec>, HarnessError> {
        let default_target = self
            .agents
            .iter()
            .find(|a| a.role == AgentRole::Mediator)
            .or_else(|| self.agents.first())
            .map(|a| a.name.clone());
        let mut humans = self.humans.clone();
        for t in &self.turns {
            if !humans.iter().any(|h| h.name == t.actor) {
                humans.push(HumanSpec {
                    name: t.actor.clone(),
                    speaker_id: None,
                    talks_to: None,
                });
            }
        }
        for h in &mut humans {
            if h.talks_to.is_none() {
                h.talks_to = default_target.clone();
            }
            let target = h.talks_to.as_deref().unwrap_or_default();
            if !self.agents.iter().any(|a| a.name == target) {
                return Err(HarnessError::ScenarioSetupFailure(format!(
                    "{} talks to unknown agent {target:?}",
                    h.name
                )));
            }
        }
        Ok(humans)
    }

    fn check_names(&self, humans: &[HumanSpec]) -> Result<(), HarnessError> {
        let mut known: Vec<String> = self.agents.iter().map(|a| a.name.clone()).collect();
        for h in humans {
            known.push(h.name.clone());
            known.push(h.proxy());
        }
        for (i, a) in self.agents.iter().enumerate() {
            if self.agents[..i]
                .iter()
                .any(|b| b.name == a.name || b.endpoint == a.endpoint)
            {
                return Err(HarnessError::ScenarioSetupFailure(format!(
                    "agent {} duplicates a name or endpoint",
                    a.name
                )));
            }
        }
        for e in &self.expectations {
            if let Some(p) = e.parties().into_iter().find(|p| !known.iter().any(|k| k == p)) {
                return Err(HarnessError::ScenarioSetupFailure(format!(
                    "expectation {:?} names unknown participant {p:?}",
                    e.describe()
                )));
            }
        }
        Ok(())
    }

    pub fn conversation_id(&self, human: &str) -> String {
        format!("{}-{}", self.name, human.to_lowercase())
    }
}

struct Proxy {
    human: HumanSpec,
    url: String,
    conversation_id: String,
    invited: bool,
}

/// Run every turn over in-process agents, then evaluate the expectations.
pub async fn run_scenario(spec: &ScenarioSpec, opts: &RunOptions) -> Result<ScenarioReport, HarnessError> {
    let humans = spec.resolved_humans()?;
    spec.check_names(&humans)?;

    let clock = if opts.freeze_time {
        Clock::Frozen(FROZEN_TIME.to_string())
    } else {
        Clock::System
    };
    let log = TranscriptLog::new(opts.transcript_dir.clone(), clock.clone());
    let loopback = LoopbackTransport::new();
    let transport: Arc<dyn Transport> = loopback.clone();
    let mut ctx = BuildContext::new(&opts.base_dir, transport.clone());
    ctx.clock = clock.clone();
    ctx.discovery = opts.discovery;

    for a in &spec.agents {
        let agent = a.build(&ctx)?;
        loopback.register(&a.endpoint, Arc::new(Host::new(agent, log.clone())));
    }

    let endpoints: HashMap<&str, &str> = spec
        .agents
        .iter()
        .map(|a| (a.name.as_str(), a.endpoint.as_str()))
        .collect();
    let mut proxies: Vec<Proxy> = humans
        .iter()
        .map(|h| Proxy {
            url: endpoints[h.talks_to.as_deref().unwrap_or_default()].to_string(),
            conversation_id: spec.conversation_id(&h.name),
            human: h.clone(),
            invited: false,
        })
        .collect();

    let outcome = drive(spec, &mut proxies, transport.as_ref(), &clock).await;
    for a in &spec.agents {
        loopback.unregister(&a.endpoint);
    }
    outcome?;

    let transcript = log.entries();
    let human_names: Vec<String> = humans.iter().map(|h| h.name.clone()).collect();
    let results: Vec<ExpectationResult> = if spec.turns.is_empty() {
        Vec::new()
    } else {
        let arrows = arrows(&transcript);
        spec.expectations
            .iter()
            .map(|e| e.evaluate(&arrows, &human_names))
            .collect()
    };
    Ok(ScenarioReport {
        scenario: spec.name.clone(),
        passed: results.iter().all(|r| r.passed),
        conversations: proxies.iter().map(|p| p.conversation_id.clone()).collect(),
        transcript_lines: transcript.len(),
        results,
        transcript,
    })
}

async fn drive(
    spec: &ScenarioSpec,
    proxies: &mut [Proxy],
    transport: &dyn Transport,
    clock: &Clock,
) -> Result<(), HarnessError> {
    for (i, turn) in spec.turns.iter().enumerate() {
        let proxy = proxies
            .iter_mut()
            .find(|p| p.human.name == turn.actor)
            .expect("actors resolved");
        let speaker = proxy
            .human
            .speaker_id
            .clone()
            .unwrap_or_else(|| proxy.human.name.clone());
        let mut env = ConversationEnvelope::new(&proxy.conversation_id, proxy.human.proxy());
        if !proxy.invited {
            env = env.with_event(EnvelopeEvent::invite(&proxy.url).addressed_to(&proxy.url));
            proxy.invited = true;
        }
        if !turn.say.is_empty() {
            env = env.with_event(EnvelopeEvent::utterance(
                DialogEvent::text_from(&speaker, &turn.say),
                clock,
            ));
        }
        if turn.bye {
            env = env.with_event(EnvelopeEvent::bye(None, clock));
        }
        transport
            .send(&proxy.url, &env)
            .await
            .map_err(|source| HarnessError::TurnFailed {
                turn: i + 1,
                actor: turn.actor.clone(),
                source,
            })?;
    }
    Ok(())
}

/// Write `<dir>/<scenario>.json`.
pub fn write_report(report: &ScenarioReport, dir: &Path) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!(
        "{}.json",
        crate::transport::transcript::file_stem(&report.scenario)
    ));
    let body = serde_json::to_string_pretty(report).expect("reports serialize");
    std::fs::write(&path, body + "\n")?;
    Ok(path)
}
