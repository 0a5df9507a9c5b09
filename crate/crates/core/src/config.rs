//! Agent configuration files (JSON or YAML) and agent construction.
//!
//! ```yaml
//! name: Cassandra
//! endpoint: http://cassandra.example/
//! role: mediator
//! backend: rules:cassandra_rules.yaml
//! routes:
//!   - keywords: [flowers]
//!     url: http://florist.example/
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::clock::Clock;
use crate::envelope::{
    parse_manifest_list, validate_manifest, AssistantManifest, Capability, CodecError, Identification, Violation,
};
use crate::registry::{PeerRegistry, Registry, RegistryError};
use crate::runtime::backend::load_structured;
use crate::runtime::{
    Agent, BackendSpec, DiscoveryPolicy, Mediator, MediatorOptions, RegistryAgent, RelayMode, Route, Specialist,
    SpecialistOptions,
};
use crate::transport::session::DEFAULT_INACTIVITY;
use crate::transport::Transport;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentRole {
    Mediator,
    #[default]
    Specialist,
    Registry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub name: String,
    /// Empty means "filled in when served".
    #[serde(default)]
    pub endpoint: String,
    #[serde(default)]
    pub role: AgentRole,
    #[serde(default)]
    pub backend: BackendSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub routes: Vec<Route>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<AssistantManifest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub greeting: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub apology: Option<String>,
    /// Registry a mediator searches when no route matches.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discovery: Option<String>,
    #[serde(default)]
    pub relay: RelayMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_delegation_depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub peers: Vec<PeerRegistry>,
    /// Registry bootstrap file: a JSON array of manifests.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifests: Option<PathBuf>,
    /// Manifests registered inline.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub registered: Vec<AssistantManifest>,
    #[serde(default)]
    pub emit_scores: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Backend(#[from] crate::runtime::backend::BackendSpecError),
    #[error("manifests in {path}: {source}")]
    Manifests {
        path: String,
        #[source]
        source: CodecError,
    },
    #[error("manifest of {agent} is invalid: {}", join(.violations))]
    InvalidManifest { agent: String, violations: Vec<Violation> },
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error("agent {0} has no endpoint")]
    MissingEndpoint(String),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// What agents need from their surroundings.
#[derive(Clone)]
pub struct BuildContext {
    /// Relative backend and manifest paths resolve against this.
    pub base_dir: PathBuf,
    pub transport: Arc<dyn Transport>,
    pub clock: Clock,
    pub inactivity: Duration,
    pub discovery: DiscoveryPolicy,
}

impl BuildContext {
    pub fn new(base_dir: impl Into<PathBuf>, transport: Arc<dyn Transport>) -> Self {
        Self {
            base_dir: base_dir.into(),
            transport,
            clock: Clock::System,
            inactivity: DEFAULT_INACTIVITY,
            discovery: DiscoveryPolicy::default(),
        }
    }
}

pub fn load_agent_config(path: &Path) -> Result<AgentConfig, ConfigError> {
    Ok(load_structured(path)?)
}

pub fn load_routes(path: &Path) -> Result<Vec<Route>, ConfigError> {
    Ok(load_structured(path)?)
}

pub fn load_manifests(path: &Path) -> Result<Vec<AssistantManifest>, ConfigError> {
    let display = path.display().to_string();
    let raw = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: display.clone(),
        source,
    })?;
    parse_manifest_list(&raw).map_err(|source| ConfigError::Manifests { path: display, source })
}

impl AgentConfig {
    pub fn new(name: impl Into<String>, endpoint: impl Into<String>, role: AgentRole) -> Self {
        Self {
            name: name.into(),
            endpoint: endpoint.into(),
            role,
            backend: BackendSpec::default(),
            routes: Vec::new(),
            manifest: None,
            speaker_id: None,
            greeting: None,
            apology: None,
            discovery: None,
            relay: RelayMode::Passthrough,
            max_delegation_depth: None,
            peers: Vec::new(),
            manifests: None,
            registered: Vec::new(),
            emit_scores: false,
        }
    }

    fn checked_manifest(&self) -> Result<Option<AssistantManifest>, ConfigError> {
        let Some(m) = &self.manifest else { return Ok(None) };
        let violations = validate_manifest(m);
        if violations.is_empty() {
            Ok(Some(m.clone()))
        } else {
            Err(ConfigError::InvalidManifest {
                agent: self.name.clone(),
                violations,
            })
        }
    }

    /// A registry's own manifest when the config gives none.
    fn registry_manifest(&self) -> AssistantManifest {
        AssistantManifest {
            identification: Identification {
                service_endpoint: self.endpoint.clone(),
                conversational_name: self.name.clone(),
                role: "Assistant Registry".into(),
                ..Default::default()
            },
            capabilities: vec![Capability {
                keywords: vec!["discovery".into(), "assistants".into()],
                languages: vec!["en-us".into()],
                ..Default::default()
            }],
            extra: Default::default(),
        }
    }

    pub fn build(&self, ctx: &BuildContext) -> Result<Arc<dyn Agent>, ConfigError> {
        if self.endpoint.is_empty() {
            return Err(ConfigError::MissingEndpoint(self.name.clone()));
        }
        let manifest = self.checked_manifest()?;
        match self.role {
            AgentRole::Specialist => {
                let mut opts = SpecialistOptions::new(&self.name, &self.endpoint);
                opts.speaker_id = self.speaker_id.clone();
                opts.manifest = manifest;
                if let Some(g) = &self.greeting {
                    opts.greeting = g.clone();
                }
                opts.clock = ctx.clock.clone();
                opts.inactivity = ctx.inactivity;
                Ok(Arc::new(Specialist::new(opts, self.backend.build(&ctx.base_dir)?)))
            }
            AgentRole::Mediator => {
                let mut opts = MediatorOptions::new(&self.name, &self.endpoint);
                opts.speaker_id = self.speaker_id.clone();
                opts.manifest = manifest;
                if let Some(g) = &self.greeting {
                    opts.greeting = g.clone();
                }
                if let Some(a) = &self.apology {
                    opts.apology = a.clone();
                }
                opts.routes = self.routes.clone();
                opts.discovery_registry = self.discovery.clone();
                opts.discovery = ctx.discovery;
                opts.relay = self.relay.clone();
                if let Some(d) = self.max_delegation_depth {
                    opts.max_delegation_depth = d;
                }
                opts.clock = ctx.clock.clone();
                opts.inactivity = ctx.inactivity;
                let backend = self.backend.build(&ctx.base_dir)?;
                Ok(Arc::new(Mediator::new(opts, backend, ctx.transport.clone())))
            }
            AgentRole::Registry => {
                let own = manifest.unwrap_or_else(|| self.registry_manifest());
                let registry = Registry::new(&self.endpoint, own)?
                    .with_peers(self.peers.iter().cloned())
                    .with_scores(self.emit_scores);
                if let Some(path) = &self.manifests {
                    for m in load_manifests(&ctx.base_dir.join(path))? {
                        registry.register_manifest(m)?;
                    }
                }
                for m in &self.registered {
                    registry.register_manifest(m.clone())?;
                }
                Ok(Arc::new(RegistryAgent::new(
                    &self.name,
                    Arc::new(registry),
                    ctx.clock.clone(),
                )))
            }
        }
    }
}
