use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use ovon::config::{load_agent_config, load_manifests, load_routes, BuildContext};
use ovon::envelope::{
    parse_envelope, parse_manifest, parse_manifest_list, serialize_envelope_pretty, validate_envelope, Violation,
};
use ovon::harness::{export_sequence_diagram, load_scenario, run_scenario, write_report, RunOptions};
use ovon::runtime::{DiscoveryClient, DiscoveryPolicy};
use ovon::transport::{
    inactivity_timeout_from_env, read_transcript, serve, Host, HttpTransport, TranscriptLog, Transport,
    DEFAULT_SEND_TIMEOUT,
};
use ovon::{Clock, CodecError, ConversationEnvelope, DialogEvent, EnvelopeEvent};

#[derive(Parser)]
#[command(name = "ovon", version, about = "Conversation envelope tools and agents")]
struct Cli {
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Utterance,
    Whisper,
    Invite,
    Bye,
}

#[derive(Subcommand)]
enum Command {
    /// Check an envelope or manifest file, or every envelope of a transcript (.jsonl).
    Validate { path: PathBuf },
    /// Run an agent from its config file.
    Serve {
        config: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        name: Option<String>,
        /// Registry bootstrap: a JSON array of manifests.
        #[arg(long)]
        manifests: Option<PathBuf>,
        /// Mediator routing table (JSON or YAML list of {keywords, url}).
        #[arg(long)]
        routes: Option<PathBuf>,
        #[arg(long, default_value = "transcripts")]
        transcripts: PathBuf,
        /// Directory holding the console bundle served at /console.
        #[arg(long)]
        console: Option<PathBuf>,
    },
    /// Send an envelope file, or wrap text in an envelope and send it.
    Send {
        url: String,
        /// Envelope file path, or the text to say.
        input: String,
        #[arg(long, value_enum, default_value = "utterance")]
        kind: Kind,
        #[arg(long, default_value = "cli-user")]
        speaker: String,
        #[arg(long)]
        conversation: Option<String>,
    },
    /// Ask a registry for assistants matching a query.
    Discover { registry: String, query: Vec<String> },
    /// Fetch an agent's manifest.
    Manifest { url: String },
    /// Replay a scenario and check its expectations.
    Scenario {
        path: PathBuf,
        #[arg(long)]
        freeze_time: bool,
        #[arg(long, default_value = "reports")]
        reports: PathBuf,
        #[arg(long, default_value = "transcripts")]
        transcripts: PathBuf,
    },
    /// Print a sequence diagram for a transcript file.
    Diagram { transcript: PathBuf },
}

type Outcome = Result<bool, String>;

fn print_envelope(env: &ConversationEnvelope) -> Result<(), String> {
    let body = serialize_envelope_pretty(env).map_err(|e| e.to_string())?;
    println!("{body}");
    Ok(())
}

fn report_violations(json: bool, path: &str, violations: &[Violation], error: Option<&CodecError>) {
    if json {
        let v = json!({
            "path": path,
            "valid": violations.is_empty() && error.is_none(),
            "error": error.map(|e| e.to_string()),
            "violations": violations,
        });
        println!("{v}");
    } else if let Some(CodecError::Syntax { .. }) = error {
        println!("{path}: {}", error.expect("checked"));
    } else if violations.is_empty() {
        println!("{path}: valid");
    } else {
        for v in violations {
            println!("{path}: {v}");
        }
    }
}

fn validate(json: bool, path: &Path) -> Outcome {
    let raw = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let display = path.display().to_string();
    let bodies: Vec<(String, String)> = if path.extension().is_some_and(|e| e == "jsonl") {
        raw.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                let envelope = serde_json::from_str::<serde_json::Value>(l)
                    .map(|v| v["envelope"].to_string())
                    .unwrap_or_else(|_| l.to_string());
                (format!("{display}:{}", i + 1), envelope)
            })
            .collect()
    } else {
        vec![(display, raw)]
    };
    let mut ok = true;
    for (name, body) in bodies {
        let value: Option<serde_json::Value> = serde_json::from_str(&body).ok();
        let is_manifest = value
            .as_ref()
            .is_some_and(|v| v.is_array() || (v.get("ovon").is_none() && v.get("identification").is_some()));
        let parsed = if is_manifest {
            let result = if value.as_ref().is_some_and(|v| v.is_array()) {
                parse_manifest_list(&body).map(|_| ())
            } else {
                parse_manifest(&body).map(|_| ())
            };
            result.map(|()| Vec::new())
        } else {
            parse_envelope(&body).map(|env| validate_envelope(&env))
        };
        match parsed {
            Ok(violations) => {
                ok &= violations.is_empty();
                report_violations(json, &name, &violations, None);
            }
            Err(e) => {
                ok = false;
                report_violations(json, &name, e.violations(), Some(&e));
            }
        }
    }
    Ok(ok)
}

fn new_conversation_id() -> String {
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or_default();
    format!("cli-{nanos}")
}

async fn send(json: bool, url: &str, input: &str, kind: Kind, speaker: &str, conv: Option<String>) -> Outcome {
    let env = if Path::new(input).is_file() {
        let raw = std::fs::read_to_string(input).map_err(|e| format!("{input}: {e}"))?;
        parse_envelope(&raw).map_err(|e| format!("{input}: {e}"))?
    } else {
        let clock = Clock::System;
        let dialog = DialogEvent::text_from(speaker, input);
        let event = match kind {
            Kind::Utterance => EnvelopeEvent::utterance(dialog, &clock),
            Kind::Whisper => EnvelopeEvent::whisper(dialog, &clock),
            Kind::Invite => EnvelopeEvent::invite(url),
            Kind::Bye => EnvelopeEvent::bye(Some(dialog), &clock),
        };
        ConversationEnvelope::new(conv.unwrap_or_else(new_conversation_id), "cli-user")
            .with_event(event.addressed_to(url))
    };
    let reply = HttpTransport::new(DEFAULT_SEND_TIMEOUT)
        .send(url, &env)
        .await
        .map_err(|e| e.to_string())?;
    if json {
        println!(
            "{}",
            ovon::envelope::serialize_envelope(&reply).map_err(|e| e.to_string())?
        );
    } else {
        print_envelope(&reply)?;
    }
    Ok(reply.response_code.as_ref().is_none_or(|c| c.is_success()))
}

async fn discover(json: bool, registry: &str, query: &str) -> Outcome {
    let transport = HttpTransport::new(DEFAULT_SEND_TIMEOUT);
    let mut client = DiscoveryClient::new(
        &transport,
        "cli-user",
        new_conversation_id(),
        DiscoveryPolicy::default(),
    );
    let candidates = client
        .find_assistants(registry, query)
        .await
        .map_err(|e| e.to_string())?;
    if json {
        println!("{}", serde_json::to_string(&candidates).expect("candidates serialize"));
    } else {
        let width = candidates
            .iter()
            .map(|c| c.conversational_name.len())
            .max()
            .unwrap_or(4)
            .max(4);
        println!("{:width$}  {:8}  URL", "NAME", "MODE");
        for c in &candidates {
            let mode = serde_json::to_value(c.servicing_mode).expect("mode serializes");
            println!(
                "{:width$}  {:8}  {}",
                c.conversational_name,
                mode.as_str().unwrap_or(""),
                c.url
            );
        }
    }
    Ok(true)
}

async fn manifest(json: bool, url: &str) -> Outcome {
    let transport = HttpTransport::new(DEFAULT_SEND_TIMEOUT);
    let mut client = DiscoveryClient::new(
        &transport,
        "cli-user",
        new_conversation_id(),
        DiscoveryPolicy::default(),
    );
    let m = client.request_manifest(url).await.map_err(|e| e.to_string())?;
    if json {
        println!("{}", serde_json::to_string(&m).expect("manifests serialize"));
        return Ok(true);
    }
    let id = &m.identification;
    for (k, v) in [
        ("serviceEndpoint", &id.service_endpoint),
        ("organization", &id.organization),
        ("conversationalName", &id.conversational_name),
        ("serviceName", &id.service_name),
        ("role", &id.role),
        ("synopsis", &id.synopsis),
    ] {
        if !v.is_empty() {
            println!("{k}: {v}");
        }
    }
    for (i, c) in m.capabilities.iter().enumerate() {
        println!("capability {}:", i + 1);
        println!("  keywords: {}", c.keywords.join(", "));
        if !c.languages.is_empty() {
            println!("  languages: {}", c.languages.join(", "));
        }
        if !c.descriptive_texts.is_empty() {
            println!("  descriptiveTexts: {}", c.descriptive_texts.join(" | "));
        }
        if !c.modalities.is_empty() {
            println!("  modalities: {}", c.modalities.join(", "));
        }
        if let Some(ct) = &c.content_type {
            println!("  contentType: {ct}");
        }
    }
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
async fn serve_agent(
    json: bool,
    config: &Path,
    port: u16,
    host: &str,
    name: Option<String>,
    manifests: Option<PathBuf>,
    routes: Option<PathBuf>,
    transcripts: PathBuf,
    console: Option<PathBuf>,
) -> Outcome {
    let mut cfg = load_agent_config(config).map_err(|e| e.to_string())?;
    if let Some(n) = name {
        cfg.name = n;
    }
    if let Some(m) = manifests {
        load_manifests(&m).map_err(|e| e.to_string())?;
        cfg.manifests = Some(std::path::absolute(&m).map_err(|e| e.to_string())?);
    }
    if let Some(r) = routes {
        cfg.routes = load_routes(&r).map_err(|e| e.to_string())?;
    }
    if cfg.endpoint.is_empty() {
        cfg.endpoint = format!("http://{host}:{port}/");
    }
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|e| format!("{host}:{port}: {e}"))?;

    let base = config.parent().map(Path::to_path_buf).unwrap_or_default();
    let transport: Arc<dyn Transport> = Arc::new(HttpTransport::new(DEFAULT_SEND_TIMEOUT));
    let mut ctx = BuildContext::new(base, transport);
    ctx.inactivity = inactivity_timeout_from_env();
    let agent = cfg.build(&ctx).map_err(|e| e.to_string())?;
    let host = Arc::new(Host::new(agent, TranscriptLog::with_dir(transcripts)));
    let handle = serve(host, addr, console).await.map_err(|e| e.to_string())?;
    if json {
        println!(
            "{}",
            json!({"name": cfg.name, "endpoint": cfg.endpoint, "listening": handle.url()})
        );
    } else {
        println!("{} listening on {} (endpoint {})", cfg.name, handle.url(), cfg.endpoint);
    }
    tokio::signal::ctrl_c().await.map_err(|e| e.to_string())?;
    handle.shutdown().await;
    Ok(true)
}

async fn scenario(json: bool, path: &Path, freeze_time: bool, reports: &Path, transcripts: PathBuf) -> Outcome {
    let spec = load_scenario(path).map_err(|e| e.to_string())?;
    let opts = RunOptions {
        base_dir: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        freeze_time,
        transcript_dir: Some(transcripts),
        ..RunOptions::default()
    };
    let report = run_scenario(&spec, &opts).await.map_err(|e| e.to_string())?;
    let written = write_report(&report, reports).map_err(|e| e.to_string())?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report).expect("reports serialize"));
    } else {
        for r in &report.results {
            let mark = if r.passed { "pass" } else { "FAIL" };
            println!("{mark}  {}  ({}; lines {:?})", r.description, r.detail, r.lines);
        }
        println!(
            "{}: {} of {} expectations passed; report at {}",
            report.scenario,
            report.results.len() - report.failures(),
            report.results.len(),
            written.display()
        );
    }
    Ok(report.passed)
}

fn diagram(json: bool, path: &Path) -> Outcome {
    let entries = read_transcript(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if entries.is_empty() {
        return Err(format!("{}: empty transcript", path.display()));
    }
    let source = export_sequence_diagram(&entries);
    if json {
        println!("{}", json!({ "diagram": source }));
    } else {
        print!("{source}");
    }
    Ok(true)
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let json = cli.json;
    let outcome = match cli.command {
        Command::Validate { path } => validate(json, &path),
        Command::Serve {
            config,
            port,
            host,
            name,
            manifests,
            routes,
            transcripts,
            console,
        } => {
            serve_agent(
                json,
                &config,
                port,
                &host,
                name,
                manifests,
                routes,
                transcripts,
                console,
            )
            .await
        }
        Command::Send {
            url,
            input,
            kind,
            speaker,
            conversation,
        } => send(json, &url, &input, kind, &speaker, conversation).await,
        Command::Discover { registry, query } => discover(json, &registry, &query.join(" ")).await,
        Command::Manifest { url } => manifest(json, &url).await,
        Command::Scenario {
            path,
            freeze_time,
            reports,
            transcripts,
        } => scenario(json, &path, freeze_time, &reports, transcripts).await,
        Command::Diagram { transcript } => diagram(json, &transcript),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}
