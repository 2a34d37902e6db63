use regionforge_project::serve::{serve, ServeOptions};
use serde_json::Value as Json;
use std::io::{BufRead, BufReader, Write};
use std::os::unix::net::UnixStream;
use std::path::Path;
use std::sync::atomic::Ordering;
use std::time::{Duration, Instant};

fn status(root: &Path) -> Option<Json> {
    let text = std::fs::read_to_string(root.join(".regionforge/status.json")).ok()?;
    serde_json::from_str(&text).ok()
}

fn entry<'a>(s: &'a Json, path: &str) -> Option<&'a Json> {
    s["entries"].as_array()?.iter().find(|e| e["path"] == path)
}

fn wait_for(root: &Path, what: &str, pred: impl Fn(&Json) -> bool) -> Json {
    let start = Instant::now();
    loop {
        if let Some(s) = status(root) {
            if pred(&s) {
                return s;
            }
        }
        assert!(start.elapsed() < Duration::from_secs(20), "timed out waiting for {what}");
        std::thread::sleep(Duration::from_millis(30));
    }
}

fn request(sock: &Path, req: &str) -> Json {
    let mut s = UnixStream::connect(sock).unwrap();
    writeln!(s, "{req}").unwrap();
    let mut line = String::new();
    BufReader::new(s).read_line(&mut line).unwrap();
    serde_json::from_str(&line).unwrap()
}

#[test]
fn serve_applies_minimal_plans() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let sock = root.join(".regionforge.sock");
    let opts = ServeOptions {
        debounce: Duration::from_millis(50),
        poll_interval: Some(Duration::from_millis(50)),
        socket: Some(sock.clone()),
        ..ServeOptions::default()
    };
    let stop = opts.stop.clone();
    let r = root.clone();
    let handle = std::thread::spawn(move || serve(&r, opts));

    wait_for(&root, "empty status", |s| s["entries"].as_array().is_some_and(|a| a.is_empty()));
    std::fs::write(root.join("base.mml"), "let inc (x : int) : int = x + 1\n").unwrap();
    std::fs::write(root.join("top.mml"), "import base (inc)\nlet twice (x : int) : int = inc (inc x)\n").unwrap();
    std::fs::write(root.join("other.mml"), "let id (x : int) : int = x\n").unwrap();
    let s = wait_for(&root, "all admitted", |s| {
        ["base.mml", "top.mml", "other.mml"]
            .iter()
            .all(|p| entry(s, p).is_some_and(|e| e["status"] == "AdmittedTransparent"))
    });
    let other_hash = entry(&s, "other.mml").unwrap()["artifact_hash"].clone();
    let edges = s["edges"].clone();

    std::fs::write(root.join("top.mml"), "import base (inc)\nlet twice (x : int) : int = inc (inc x) +\n").unwrap();
    wait_for(&root, "parse error", |s| entry(s, "top.mml").is_some_and(|e| e["status"] == "ErrorDuringValidation"));
    let s = status(&root).unwrap();
    assert_eq!(entry(&s, "top.mml").unwrap()["last_good"], true);
    assert_eq!(s["edges"], edges);
    assert_eq!(entry(&s, "base.mml").unwrap()["status"], "AdmittedTransparent");

    std::fs::write(root.join("top.mml"), "import base (inc)\nlet twice (x : int) : int = inc (inc x)\n").unwrap();
    let s = wait_for(&root, "recovery", |s| entry(s, "top.mml").is_some_and(|e| e["status"] == "AdmittedTransparent"));
    assert_eq!(s["edges"], edges);

    let base_before = entry(&s, "base.mml").unwrap()["artifact_hash"].clone();
    let top_before = entry(&s, "top.mml").unwrap()["artifact_hash"].clone();
    std::fs::write(root.join("base.mml"), "let inc (x : int) : int = 1 + x\n").unwrap();
    let s = wait_for(&root, "base change", |s| {
        entry(s, "base.mml").is_some_and(|e| e["artifact_hash"] != base_before)
            && entry(s, "top.mml").is_some_and(|e| e["artifact_hash"] != top_before)
    });
    assert_eq!(entry(&s, "other.mml").unwrap()["artifact_hash"], other_hash);

    let reply = request(&sock, r#"{"cmd":"status"}"#);
    assert_eq!(reply["entries"].as_array().unwrap().len(), 3);
    let reply = request(&sock, r#"{"cmd":"formalize","path":"top.mml"}"#);
    assert!(reply["plan"]["tasks"].as_array().unwrap().is_empty(), "{reply}");
    let reply = request(&sock, r#"{"cmd":"nope"}"#);
    assert!(reply["error"].is_string());

    stop.store(true, Ordering::Relaxed);
    handle.join().unwrap().unwrap();
}
