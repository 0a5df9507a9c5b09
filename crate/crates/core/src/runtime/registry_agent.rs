use std::sync::Arc;

use async_trait::async_trait;

use super::{error_reply, Agent};
use crate::clock::Clock;
use crate::envelope::ConversationEnvelope;
use crate::registry::{Registry, RegistryError};

/// Serves a [`Registry`] over the agent interface.
pub struct RegistryAgent {
    name: String,
    registry: Arc<Registry>,
    clock: Clock,
}

impl RegistryAgent {
    pub fn new(name: impl Into<String>, registry: Arc<Registry>, clock: Clock) -> Self {
        Self {
            name: name.into(),
            registry,
            clock,
        }
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }
}

#[async_trait]
impl Agent for RegistryAgent {
    fn name(&self) -> &str {
        &self.name
    }

    fn endpoint(&self) -> &str {
        self.registry.endpoint()
    }

    async fn handle(&self, env: ConversationEnvelope) -> ConversationEnvelope {
        match self.registry.handle_discovery_envelope(&env) {
            Ok(reply) => reply,
            Err(e @ RegistryError::UnsupportedEvent(_)) => {
                error_reply(&env, self.endpoint(), &self.name, 501, &e.to_string(), &self.clock)
            }
            Err(e) => error_reply(&env, self.endpoint(), &self.name, 500, &e.to_string(), &self.clock),
        }
    }
}
