mod common;

use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use common::specs_dir;
use serde_json::Value;

fn p6() -> Command {
    Command::new(env!("CARGO_BIN_EXE_p6"))
}

#[test]
fn run_writes_scenes_and_exports() {
    let out = tempfile::tempdir().unwrap();
    let status = p6()
        .args(["run", specs_dir().join("baby_fig2.json").to_str().unwrap(), "--out"])
        .arg(out.path())
        .args(["--export", "Clusters", "--export", "$frame"])
        .status()
        .unwrap();
    assert!(status.success());
    let scenes: Value = serde_json::from_slice(&std::fs::read(out.path().join("scenes.json")).unwrap()).unwrap();
    assert_eq!(scenes.as_array().unwrap().len(), 2);
    let clusters: Value = serde_json::from_slice(&std::fs::read(out.path().join("Clusters.json")).unwrap()).unwrap();
    assert!(clusters["Clusters"].is_array());
    assert!(out.path().join("frame.json").exists());
}

#[test]
fn run_chains_through_an_exported_frame() {
    let dir = tempfile::tempdir().unwrap();
    let (up, down) = (dir.path().join("up"), dir.path().join("down"));
    let status = p6()
        .args(["run", specs_dir().join("covid_changepoints.json").to_str().unwrap(), "--out"])
        .arg(&up)
        .args(["--export", "$frame"])
        .status()
        .unwrap();
    assert!(status.success());
    let status = p6()
        .args(["run", specs_dir().join("covid_timeline.json").to_str().unwrap(), "--out"])
        .arg(&down)
        .arg("--upstream")
        .arg(up.join("frame.json"))
        .status()
        .unwrap();
    assert!(status.success());
    let scenes: Value = serde_json::from_slice(&std::fs::read(down.join("scenes.json")).unwrap()).unwrap();
    let timeline = scenes.as_array().unwrap().iter().find(|s| s["view_id"] == "timeline").unwrap();
    assert_eq!(timeline["annotations"].as_array().unwrap().len(), 3);
}

#[test]
fn exit_codes_distinguish_findings_from_failures() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    };
    std::fs::copy(specs_dir().join("data/baby.csv"), dir.path().join("baby.csv")).unwrap();
    let good = write("good.json", r#"{"data": {"source": "baby.csv"}, "visualizations": [{"mark": "circle", "x": "MotherAge", "y": "BabyWeight"}]}"#);
    let unresolved = write("bad.json", r#"{"data": {"source": "baby.csv"}, "visualizations": [{"mark": "circle", "x": "Nope", "y": "BabyWeight"}]}"#);
    let broken = write("broken.json", "{}");
    let missing = write("missing.json", r#"{"data": {"source": "absent.csv"}}"#);
    let code = |args: &[&str]| p6().args(args).stdout(Stdio::null()).stderr(Stdio::null()).status().unwrap().code();
    let s = |p: &std::path::Path| p.to_str().unwrap().to_string();
    let out = s(&dir.path().join("out"));

    assert_eq!(code(&["validate", &s(&good)]), Some(0));
    assert_eq!(code(&["validate", &s(&unresolved)]), Some(1));
    assert_eq!(code(&["validate", &s(&broken)]), Some(1));
    assert_eq!(code(&["validate", &s(&missing)]), Some(2));
    assert_eq!(code(&["run", &s(&unresolved), "--out", &out]), Some(1));
    assert_eq!(code(&["run", &s(&missing), "--out", &out]), Some(2));
    assert_eq!(code(&["run", &s(&good), "--out", &out, "--export", "Ghost"]), Some(2));

    let printed = p6().args(["validate", &s(&unresolved)]).output().unwrap();
    assert!(String::from_utf8_lossy(&printed.stdout).contains("UnresolvedReference"));
}

#[test]
fn serve_answers_on_the_requested_port() {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut child = p6()
        .args(["serve", specs_dir().join("baby_fig2.json").to_str().unwrap(), "--port", &port.to_string()])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(30);
    let rt = tokio::runtime::Runtime::new().unwrap();
    let answer = loop {
        let got = rt.block_on(async { reqwest::get(format!("http://127.0.0.1:{port}/api/pipelines")).await });
        match got {
            Ok(r) => break Some((r.status().as_u16(), rt.block_on(r.json::<Value>()).unwrap())),
            Err(_) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(100)),
            Err(_) => break None,
        }
    };
    child.kill().unwrap();
    child.wait().unwrap();
    let (status, list) = answer.expect("server came up");
    assert_eq!(status, 200);
    assert_eq!(list.as_array().unwrap().len(), 1);
}
