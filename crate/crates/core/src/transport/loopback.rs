use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use async_trait::async_trait;

use super::{Host, Transport, TransportError};
use crate::envelope::{parse_envelope, serialize_envelope, ConversationEnvelope};

/// In-process delivery to registered hosts.
///
/// Envelopes still go through serialize and parse in both directions, so a
/// loopback run exercises the same wire format as HTTP.
#[derive(Default)]
pub struct LoopbackTransport {
    hosts: RwLock<HashMap<String, Arc<Host>>>,
}

impl LoopbackTransport {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    pub fn register(&self, url: impl Into<String>, host: Arc<Host>) {
        self.hosts
            .write()
            .expect("loopback lock poisoned")
            .insert(url.into(), host);
    }

    pub fn unregister(&self, url: &str) -> Option<Arc<Host>> {
        self.hosts.write().expect("loopback lock poisoned").remove(url)
    }

    pub fn host(&self, url: &str) -> Option<Arc<Host>> {
        self.hosts.read().expect("loopback lock poisoned").get(url).cloned()
    }
}

#[async_trait]
impl Transport for LoopbackTransport {
    async fn send(&self, url: &str, env: &ConversationEnvelope) -> Result<ConversationEnvelope, TransportError> {
        let host = self.host(url).ok_or_else(|| TransportError::ConnectFailure {
            url: url.to_string(),
            message: "no agent registered at this url".to_string(),
        })?;
        let body = serialize_envelope(env).map_err(TransportError::InvalidRequest)?;
        let reply = host.dispatch_raw(&body).await;
        if reply.status != 200 {
            return Err(TransportError::Rejected {
                url: url.to_string(),
                status: reply.status,
                body: reply.body,
            });
        }
        parse_envelope(&reply.body).map_err(|source| TransportError::InvalidResponseEnvelope {
            url: url.to_string(),
            source,
        })
    }
}
