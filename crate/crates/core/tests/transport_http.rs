mod common;

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use common::listing;
use ovon::config::{AgentConfig, AgentRole, BuildContext};
use ovon::envelope::{parse_envelope, parse_manifest};
use ovon::runtime::{BackendSpec, Rule, RuleSet};
use ovon::transport::{
    serve, Host, HttpTransport, LoopbackTransport, ServiceHandle, TranscriptLog, Transport, TransportError,
};
use ovon::{Clock, EventType};
use serde_json::Value;

const HARRY: &str = "Certainly! \"Harry Potter and the Philosopher's Stone\" is the first novel in the series.";

fn any_port() -> SocketAddr {
    "127.0.0.1:0".parse().unwrap()
}

async fn library(console: Option<std::path::PathBuf>) -> (ServiceHandle, Arc<TranscriptLog>) {
    let mut cfg = AgentConfig::new(
        "Smart Library APIs",
        "https://your-smartlibrary-url-here",
        AgentRole::Specialist,
    );
    cfg.manifest = Some(parse_manifest(&common::listing(4)).unwrap());
    cfg.backend = BackendSpec::Rules {
        rules: RuleSet {
            rules: vec![Rule {
                keywords: vec!["Harry Potter".into()],
                reply: HARRY.into(),
                then: None,
            }],
            fallback: None,
        },
    };
    let agent = cfg.build(&BuildContext::new(".", LoopbackTransport::new())).unwrap();
    let log = TranscriptLog::new(None, Clock::System);
    let handle = serve(Arc::new(Host::new(agent, log.clone())), any_port(), console)
        .await
        .unwrap();
    (handle, log)
}

#[tokio::test]
async fn listing_two_gets_a_listing_three_shaped_reply() {
    let (svc, log) = library(None).await;
    let t = HttpTransport::default();
    let reply = t.send(&svc.url(), &parse_envelope(&listing(2)).unwrap()).await.unwrap();

    let rc = reply.response_code.as_ref().unwrap();
    assert_eq!((rc.code, rc.description.as_deref()), (200, Some("OK")));
    assert_eq!(reply.conversation_id(), "conv_1699812834794");
    let kinds: Vec<_> = reply.events.iter().map(|e| e.event_type).collect();
    assert_eq!(kinds, [EventType::Utterance]);
    assert_eq!(reply.events[0].text().as_deref(), Some(HARRY));

    let three = parse_envelope(&listing(3)).unwrap();
    assert_eq!(reply.schema.version, three.schema.version);
    assert_eq!(reply.response_code, three.response_code);

    let entries = log.entries();
    assert_eq!(entries.len(), 2);
    svc.shutdown().await;
}

#[tokio::test]
async fn listing_five_gets_listing_six_over_http() {
    let (svc, _) = library(None).await;
    let reply = HttpTransport::default()
        .send(&svc.url(), &parse_envelope(&listing(5)).unwrap())
        .await
        .unwrap();
    let six = parse_envelope(&listing(6)).unwrap();
    assert_eq!(reply.conversation_id(), six.conversation_id());
    assert_eq!(reply.sender, six.sender);
    assert_eq!(reply.events.len(), 1);
    assert_eq!(reply.events[0].event_type, EventType::PublishManifest);
    assert_eq!(
        reply.events[0].manifest().unwrap().identification.role,
        "Book Specialist"
    );
    svc.shutdown().await;
}

#[tokio::test]
async fn malformed_bodies_get_400() {
    let (svc, log) = library(None).await;
    let client = reqwest::Client::new();
    for body in ["{\"ovon\": ", "{\"ovon\": {}}", "[]"] {
        let resp = client.post(svc.url()).body(body).send().await.unwrap();
        assert_eq!(resp.status().as_u16(), 400, "{body}");
        let v: Value = serde_json::from_str(&resp.text().await.unwrap()).unwrap();
        assert!(v["error"].is_string());
    }
    assert!(log.entries().is_empty());
    svc.shutdown().await;
}

#[tokio::test]
async fn closed_port_is_a_connect_failure() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let err = HttpTransport::new(Duration::from_secs(2))
        .send(&format!("http://{addr}/"), &parse_envelope(&listing(1)).unwrap())
        .await
        .unwrap_err();
    assert!(matches!(err, TransportError::ConnectFailure { .. }), "{err}");
}

#[tokio::test]
async fn reply_without_ovon_is_an_invalid_response() {
    let app = axum::Router::new().route("/", axum::routing::post(|| async { "{\"hello\": 1}" }));
    let listener = tokio::net::TcpListener::bind(any_port()).await.unwrap();
    let addr = listener.local_addr().unwrap();
    let server = tokio::spawn(async move { axum::serve(listener, app).await });
    let err = HttpTransport::default()
        .send(&format!("http://{addr}/"), &parse_envelope(&listing(1)).unwrap())
        .await
        .unwrap_err();
    assert!(matches!(err, TransportError::InvalidResponseEnvelope { .. }), "{err}");
    server.abort();
}

#[tokio::test]
async fn slow_peer_times_out() {
    let app = axum::Router::new().route(
        "/",
        axum::routing::post(|| async {
            tokio::time::sleep(Duration::from_secs(5)).await;
            ""
        }),
    );
    let listener = tokio::net::TcpListener::bind(any_port()).await.unwrap();
    let addr = listener.local_addr().unwrap();
    let server = tokio::spawn(async move { axum::serve(listener, app).await });
    let err = HttpTransport::new(Duration::from_millis(200))
        .send(&format!("http://{addr}/"), &parse_envelope(&listing(1)).unwrap())
        .await
        .unwrap_err();
    assert!(matches!(err, TransportError::Timeout(_)), "{err}");
    server.abort();
}

#[tokio::test]
async fn console_is_served_from_the_bundle() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<html>console</html>").unwrap();
    std::fs::write(dir.path().join("app.js"), "console.log(1)").unwrap();
    let (svc, _) = library(Some(dir.path().to_path_buf())).await;
    let client = reqwest::Client::new();

    let page = client.get(format!("{}console", svc.url())).send().await.unwrap();
    assert_eq!(page.status().as_u16(), 200);
    assert!(page.text().await.unwrap().contains("console"));

    let js = client.get(format!("{}console/app.js", svc.url())).send().await.unwrap();
    assert_eq!(js.headers()["content-type"], "text/javascript");

    let escape = client
        .get(format!("{}console/..%2F..%2Fetc%2Fpasswd", svc.url()))
        .send()
        .await
        .unwrap();
    assert_eq!(escape.status().as_u16(), 404);
    svc.shutdown().await;
}

#[tokio::test]
async fn console_without_bundle_is_404() {
    let (svc, _) = library(None).await;
    let resp = reqwest::get(format!("{}console", svc.url())).await.unwrap();
    assert_eq!(resp.status().as_u16(), 404);
    svc.shutdown().await;
}
