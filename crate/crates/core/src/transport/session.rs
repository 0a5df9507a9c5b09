use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use tokio::sync::{Mutex as AsyncMutex, OwnedMutexGuard};

/// Default inactivity timeout.
pub const DEFAULT_INACTIVITY: Duration = Duration::from_secs(60);

/// Environment variable overriding the inactivity timeout, in seconds.
pub const TIMEOUT_ENV: &str = "OVON_TIMEOUT_SECS";

/// Inactivity timeout from `OVON_TIMEOUT_SECS`, falling back to 60 s.
pub fn inactivity_timeout_from_env() -> Duration {
    std::env::var(TIMEOUT_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<f64>().ok())
        .filter(|s| s.is_finite() && *s >= 0.0)
        .map(Duration::from_secs_f64)
        .unwrap_or(DEFAULT_INACTIVITY)
}

/// Per-conversation data that reacts to inactivity.
pub trait SessionData: Default + Send + 'static {
    /// Called once when the session has been quiet longer than the timeout.
    fn on_inactivity(&mut self);
}

pub struct Session<T> {
    pub data: T,
    pub last_activity: Instant,
}

/// Sessions keyed by conversation id.
///
/// Holding the guard returned by [`SessionStore::acquire`] serializes all work
/// on that conversation; different conversations proceed independently.
pub struct SessionStore<T> {
    sessions: Mutex<HashMap<String, Arc<AsyncMutex<Session<T>>>>>,
    timeout: Duration,
}

impl<T: SessionData> SessionStore<T> {
    pub fn new(timeout: Duration) -> Self {
        Self {
            sessions: Mutex::new(HashMap::new()),
            timeout,
        }
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    /// Lock the session for `conversation_id`, creating it if needed.
    ///
    /// A session idle for longer than the timeout gets `on_inactivity` before
    /// the guard is handed out.
    pub async fn acquire(&self, conversation_id: &str) -> OwnedMutexGuard<Session<T>> {
        let slot = {
            let mut map = self.sessions.lock().expect("session map poisoned");
            map.entry(conversation_id.to_string())
                .or_insert_with(|| {
                    Arc::new(AsyncMutex::new(Session {
                        data: T::default(),
                        last_activity: Instant::now(),
                    }))
                })
                .clone()
        };
        let mut guard = slot.lock_owned().await;
        if guard.last_activity.elapsed() > self.timeout {
            guard.data.on_inactivity();
        }
        guard.last_activity = Instant::now();
        guard
    }

    /// Apply inactivity to every idle session not currently locked.
    pub fn expire_idle(&self) -> usize {
        let slots: Vec<_> = self
            .sessions
            .lock()
            .expect("session map poisoned")
            .values()
            .cloned()
            .collect();
        let mut expired = 0;
        for slot in slots {
            if let Ok(mut s) = slot.try_lock() {
                if s.last_activity.elapsed() > self.timeout {
                    s.data.on_inactivity();
                    s.last_activity = Instant::now();
                    expired += 1;
                }
            }
        }
        expired
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().expect("session map poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn conversation_ids(&self) -> Vec<String> {
        let mut ids: Vec<_> = self
            .sessions
            .lock()
            .expect("session map poisoned")
            .keys()
            .cloned()
            .collect();
        ids.sort();
        ids
    }
}
