mod common;

use std::io::{BufRead, BufReader};
use std::process::{Command, Output, Stdio};
use std::time::Duration;

use common::{listing, listing_path, repo_root, scenario_path};

fn ovon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ovon"))
        .args(args)
        .current_dir(repo_root())
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_accepts_every_corpus_listing() {
    for n in 1..=6 {
        let o = ovon(&["validate", listing_path(n).to_str().unwrap()]);
        assert!(
            o.status.success(),
            "listing {n}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn validate_reports_one_violation_for_empty_events() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&listing(2)).unwrap();
    v["ovon"]["events"] = serde_json::json!([]);
    let path = dir.path().join("bad.json");
    std::fs::write(&path, v.to_string()).unwrap();

    let o = ovon(&["--json", "validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let out: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let violations = out["violations"].as_array().unwrap();
    assert_eq!(violations.len(), 1, "{out}");
    assert_eq!(violations[0]["path"], "ovon.events");
}

#[test]
fn bad_usage_exits_2() {
    assert_eq!(ovon(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn scenario_command_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = ovon(&[
        "scenario",
        scenario_path("smart_library").to_str().unwrap(),
        "--freeze-time",
        "--reports",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("smart_library.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
}

#[test]
fn diagram_command_prints_plantuml() {
    let dir = tempfile::tempdir().unwrap();
    let o = ovon(&[
        "scenario",
        scenario_path("smart_library").to_str().unwrap(),
        "--freeze-time",
        "--reports",
        dir.path().to_str().unwrap(),
        "--transcripts",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let jsonl = dir.path().join("smart_library-lea.jsonl");
    let d = ovon(&["diagram", jsonl.to_str().unwrap()]);
    assert!(d.status.success());
    assert!(stdout(&d).contains("@startuml"));
}

struct Server(std::process::Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

/// Start `ovon serve` on a free port and wait until it accepts connections.
fn serve(config: &std::path::Path, transcripts: &std::path::Path) -> (Server, String) {
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let child = Command::new(env!("CARGO_BIN_EXE_ovon"))
        .args(["serve", config.to_str().unwrap(), "--port", &port.to_string()])
        .args(["--transcripts", transcripts.to_str().unwrap()])
        .current_dir(repo_root())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut server = Server(child);
    let out = server.0.stdout.take().unwrap();
    let mut first = String::new();
    BufReader::new(out).read_line(&mut first).unwrap();
    let url = format!("http://127.0.0.1:{port}/");
    for _ in 0..50 {
        if std::net::TcpStream::connect(("127.0.0.1", port)).is_ok() {
            return (server, url);
        }
        std::thread::sleep(Duration::from_millis(100));
    }
    panic!("server did not start: {first}");
}

#[test]
fn served_specialist_answers_manifest_and_send() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("library.yaml");
    let manifest = std::fs::read_to_string(listing_path(4)).unwrap();
    std::fs::write(
        &config,
        format!(
            "name: smartlibrary\nrole: specialist\nbackend: echo\nmanifest: {}\n",
            manifest.replace(['\n', '\t'], " ")
        ),
    )
    .unwrap();
    let transcripts = dir.path().join("t");
    let (_server, url) = serve(&config, &transcripts);

    let m = ovon(&["manifest", &url]);
    assert!(m.status.success(), "{}", String::from_utf8_lossy(&m.stderr));
    assert!(stdout(&m).contains("Book Specialist"));

    let s = ovon(&["send", &url, "hello there", "--conversation", "cli-test"]);
    assert!(s.status.success(), "{}", String::from_utf8_lossy(&s.stderr));
    assert!(stdout(&s).contains("hello there"));

    let j = ovon(&["--json", "send", &url, listing_path(2).to_str().unwrap()]);
    assert!(j.status.success());
    let reply: serde_json::Value = serde_json::from_str(&stdout(&j)).unwrap();
    assert_eq!(reply["ovon"]["responseCode"]["code"], 200);

    let log = std::fs::read_to_string(transcripts.join("cli-test.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 2);
}

#[test]
fn send_to_a_closed_port_fails() {
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let o = ovon(&["send", &format!("http://127.0.0.1:{port}/"), "hi"]);
    assert_eq!(o.status.code(), Some(1));
}
