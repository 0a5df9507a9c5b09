use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use super::{Host, Transport, TransportError, DEFAULT_SEND_TIMEOUT};
use crate::envelope::{parse_envelope, serialize_envelope, ConversationEnvelope};

/// Client side: POST envelopes as `application/json`.
#[derive(Debug, Clone)]
pub struct HttpTransport {
    client: reqwest::Client,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .expect("http client builds without TLS config");
        Self { client }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        Self::new(DEFAULT_SEND_TIMEOUT)
    }
}

#[async_trait]
impl Transport for HttpTransport {
    async fn send(&self, url: &str, env: &ConversationEnvelope) -> Result<ConversationEnvelope, TransportError> {
        let body = serialize_envelope(env).map_err(TransportError::InvalidRequest)?;
        let classify = |e: reqwest::Error| {
            if e.is_timeout() {
                TransportError::Timeout(url.to_string())
            } else {
                TransportError::ConnectFailure {
                    url: url.to_string(),
                    message: e.to_string(),
                }
            }
        };
        let resp = self
            .client
            .post(url)
            .header(header::CONTENT_TYPE, "application/json")
            .body(body)
            .send()
            .await
            .map_err(classify)?;
        let status = resp.status().as_u16();
        let text = resp.text().await.map_err(classify)?;
        if status != 200 {
            return Err(TransportError::Rejected {
                url: url.to_string(),
                status,
                body: text,
            });
        }
        parse_envelope(&text).map_err(|source| TransportError::InvalidResponseEnvelope {
            url: url.to_string(),
            source,
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    BindFailure {
        addr: SocketAddr,
        #[source]
        source: std::io::Error,
    },
}

/// A running agent service.
pub struct ServiceHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    task: JoinHandle<()>,
    sweeper: JoinHandle<()>,
}

impl ServiceHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Base URL the service accepts envelopes at.
    pub fn url(&self) -> String {
        format!("http://{}/", self.addr)
    }

    /// Wait until the server stops (it only stops on shutdown).
    pub async fn wait(mut self) {
        let task = std::mem::replace(&mut self.task, tokio::spawn(async {}));
        let _ = task.await;
    }

    pub async fn shutdown(mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.sweeper.abort();
        let task = std::mem::replace(&mut self.task, tokio::spawn(async {}));
        let _ = task.await;
    }
}

#[derive(Clone)]
struct AppState {
    host: Arc<Host>,
    console_dir: Option<PathBuf>,
}

async fn post_envelope(State(state): State<AppState>, body: String) -> Response {
    let reply = state.host.dispatch_raw(&body).await;
    let status = StatusCode::from_u16(reply.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, [(header::CONTENT_TYPE, "application/json")], reply.body).into_response()
}

async fn console(State(state): State<AppState>) -> Response {
    let Some(dir) = &state.console_dir else {
        return (StatusCode::NOT_FOUND, "console bundle not configured").into_response();
    };
    match tokio::fs::read_to_string(dir.join("index.html")).await {
        Ok(html) => Html(html).into_response(),
        Err(_) => (StatusCode::NOT_FOUND, "console bundle not found").into_response(),
    }
}

/// Files of the console bundle below `console_dir`.
async fn console_asset(State(state): State<AppState>, UrlPath(path): UrlPath<String>) -> Response {
    let Some(dir) = &state.console_dir else {
        return (StatusCode::NOT_FOUND, "console bundle not configured").into_response();
    };
    let rel = std::path::Path::new(&path);
    if rel.components().any(|c| !matches!(c, std::path::Component::Normal(_))) {
        return (StatusCode::NOT_FOUND, "not found").into_response();
    }
    let content_type = match rel.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        _ => "application/octet-stream",
    };
    match tokio::fs::read(dir.join(rel)).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type)], bytes).into_response(),
        Err(_) => (StatusCode::NOT_FOUND, "not found").into_response(),
    }
}

/// Serve `host` at `POST /` on `addr`; `GET /console` serves the chat
/// console's `index.html` from `console_dir` when one is given.
pub async fn serve(
    host: Arc<Host>,
    addr: SocketAddr,
    console_dir: Option<PathBuf>,
) -> Result<ServiceHandle, ServeError> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::BindFailure { addr, source })?;
    let addr = listener
        .local_addr()
        .map_err(|source| ServeError::BindFailure { addr, source })?;

    let state = AppState {
        host: host.clone(),
        console_dir,
    };
    let app = Router::new()
        .route("/", post(post_envelope))
        .route("/console", get(console))
        .route("/console/", get(console))
        .route("/console/*path", get(console_asset))
        .with_state(state);

    let (tx, rx) = oneshot::channel::<()>();
    let task = tokio::spawn(async move {
        let server = axum::serve(listener, app).with_graceful_shutdown(async {
            let _ = rx.await;
        });
        if let Err(e) = server.await {
            tracing::error!("server on {addr} stopped: {e}");
        }
    });

    let agent = host.agent().clone();
    let sweeper = tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(1));
        loop {
            tick.tick().await;
            agent.expire_idle();
        }
    });

    Ok(ServiceHandle {
        addr,
        shutdown: Some(tx),
        task,
        sweeper,
    })
}
