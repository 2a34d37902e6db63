//! The watch loop: debounced file events become change plans, applied by a
//! single writer; status is published as a snapshot file and over a local
//! line-delimited JSON socket.

use crate::apply::{apply_plan, ApplyOptions};
use crate::metamodel::Metamodel;
use crate::plan::{plan_formalize, plan_reformalization};
use crate::ProjectError;
use notify::{Config, PollWatcher, RecommendedWatcher, RecursiveMode, Watcher};
use serde_json::{json, Value as Json};
use std::io::{BufRead, BufReader, Write};
use std::os::unix::net::{UnixListener, UnixStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, RwLock};
use std::time::{Duration, Instant};

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub debounce: Duration,
    /// Forces the polling watcher with this interval.
    pub poll_interval: Option<Duration>,
    pub socket: Option<PathBuf>,
    pub apply: ApplyOptions,
    /// Set to stop the loop.
    pub stop: Arc<AtomicBool>,
}

impl Default for ServeOptions {
    fn default() -> Self {
        ServeOptions {
            debounce: Duration::from_millis(200),
            poll_interval: None,
            socket: None,
            apply: ApplyOptions::default(),
            stop: Arc::new(AtomicBool::new(false)),
        }
    }
}

const FALLBACK_POLL: Duration = Duration::from_millis(500);

enum Msg {
    Fs,
    Formalize(String, Sender<Json>),
}

fn start_watcher(root: &Path, tx: Sender<Msg>, poll: Option<Duration>) -> Result<Box<dyn Watcher + Send>, ProjectError> {
    let handler = move |res: notify::Result<notify::Event>| match res {
        Ok(_) => {
            let _ = tx.send(Msg::Fs);
        }
        Err(e) => log::warn!("watch error: {e}"),
    };
    if poll.is_none() {
        match RecommendedWatcher::new(handler.clone(), Config::default()) {
            Ok(mut w) => match w.watch(root, RecursiveMode::Recursive) {
                Ok(()) => return Ok(Box::new(w)),
                Err(e) => log::warn!("native watcher unavailable ({e}); polling"),
            },
            Err(e) => log::warn!("native watcher unavailable ({e}); polling"),
        }
    }
    let cfg = Config::default().with_poll_interval(poll.unwrap_or(FALLBACK_POLL)).with_compare_contents(true);
    let mut w = PollWatcher::new(handler, cfg)?;
    w.watch(root, RecursiveMode::Recursive)?;
    Ok(Box::new(w))
}

fn bind_socket(path: &Path) -> Result<UnixListener, ProjectError> {
    if path.exists() {
        if UnixStream::connect(path).is_ok() {
            return Err(ProjectError::Socket {
                path: path.to_path_buf(),
                source: std::io::Error::new(std::io::ErrorKind::AddrInUse, "another server is listening"),
            });
        }
        let _ = std::fs::remove_file(path);
    }
    let l = UnixListener::bind(path).map_err(|source| ProjectError::Socket { path: path.to_path_buf(), source })?;
    l.set_nonblocking(true).map_err(|source| ProjectError::Socket { path: path.to_path_buf(), source })?;
    Ok(l)
}

fn handle_client(stream: UnixStream, snapshot: Arc<RwLock<Json>>, tx: Sender<Msg>) {
    let _ = stream.set_nonblocking(false);
    let Ok(mut out) = stream.try_clone() else { return };
    for line in BufReader::new(stream).lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let reply = match serde_json::from_str::<Json>(&line) {
            Err(e) => json!({"error": format!("bad request: {e}")}),
            Ok(req) => match (req["cmd"].as_str(), req["path"].as_str()) {
                (Some("status"), _) => snapshot.read().expect("snapshot lock").clone(),
                (Some("formalize"), Some(p)) => {
                    let (rtx, rrx) = channel();
                    if tx.send(Msg::Formalize(p.to_string(), rtx)).is_err() {
                        json!({"error": "server stopping"})
                    } else {
                        rrx.recv().unwrap_or_else(|_| json!({"error": "server stopping"}))
                    }
                }
                (Some("formalize"), None) => json!({"error": "formalize needs a path"}),
                _ => json!({"error": "unknown cmd; expected status or formalize"}),
            },
        };
        if writeln!(out, "{reply}").is_err() {
            break;
        }
    }
}

fn accept_loop(l: UnixListener, snapshot: Arc<RwLock<Json>>, tx: Sender<Msg>, stop: Arc<AtomicBool>) {
    while !stop.load(Ordering::Relaxed) {
        match l.accept() {
            Ok((s, _)) => {
                let (snap, tx) = (snapshot.clone(), tx.clone());
                std::thread::spawn(move || handle_client(s, snap, tx));
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => std::thread::sleep(Duration::from_millis(25)),
            Err(e) => {
                log::warn!("socket accept failed: {e}");
                std::thread::sleep(Duration::from_millis(100));
            }
        }
    }
}

fn publish(mm: &Metamodel, snapshot: &RwLock<Json>) {
    if let Err(e) = mm.write_status() {
        log::warn!("cannot write status file: {e}");
    }
    *snapshot.write().expect("snapshot lock") = mm.status_json();
}

fn sync(mm: &mut Metamodel, opts: &ServeOptions) -> Result<(), ProjectError> {
    let changes = mm.detect_changes()?;
    if changes.is_empty() {
        return Ok(());
    }
    for w in mm.refresh(&changes) {
        log::warn!("{w}");
    }
    let plan = plan_reformalization(mm, &changes);
    log::info!("changes {:?} -> plan {:?}", changes, plan.paths());
    apply_plan(mm, &plan, &opts.apply)
}

fn drain_debounced(rx: &Receiver<Msg>, debounce: Duration, pending: &mut Vec<(String, Sender<Json>)>) {
    let mut deadline = Instant::now() + debounce;
    loop {
        let now = Instant::now();
        if now >= deadline {
            return;
        }
        match rx.recv_timeout(deadline - now) {
            Ok(Msg::Fs) => deadline = Instant::now() + debounce,
            Ok(Msg::Formalize(p, r)) => pending.push((p, r)),
            Err(_) => return,
        }
    }
}

/// Runs until `opts.stop` is set. Starts by formalizing every model, then
/// applies minimal plans as files change.
pub fn serve(root: &Path, opts: ServeOptions) -> Result<(), ProjectError> {
    let mut mm = Metamodel::scan(root)?;
    let snapshot = Arc::new(RwLock::new(Json::Null));
    let (tx, rx) = channel();
    let listener = opts.socket.as_deref().map(bind_socket).transpose()?;
    let plan = plan_formalize(&mm, None)?;
    apply_plan(&mut mm, &plan, &opts.apply)?;
    publish(&mm, &snapshot);
    let _watcher = start_watcher(root, tx.clone(), opts.poll_interval)?;
    if let Some(l) = listener {
        let (snap, tx, stop) = (snapshot.clone(), tx.clone(), opts.stop.clone());
        std::thread::spawn(move || accept_loop(l, snap, tx, stop));
    }
    while !opts.stop.load(Ordering::Relaxed) {
        let mut pending = vec![];
        match rx.recv_timeout(Duration::from_millis(50)) {
            Ok(Msg::Fs) => {
                drain_debounced(&rx, opts.debounce, &mut pending);
                sync(&mut mm, &opts)?;
                publish(&mm, &snapshot);
            }
            Ok(Msg::Formalize(p, r)) => pending.push((p, r)),
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => break,
        }
        for (p, reply) in pending {
            sync(&mut mm, &opts)?;
            let resp = match plan_formalize(&mm, Some(&p)) {
                Ok(plan) => match apply_plan(&mut mm, &plan, &opts.apply) {
                    Ok(()) => json!({"plan": plan.to_json(), "status": mm.status_json()}),
                    Err(e) => json!({"error": e.to_string()}),
                },
                Err(e) => json!({"error": e.to_string()}),
            };
            publish(&mm, &snapshot);
            let _ = reply.send(resp);
        }
    }
    if let Some(s) = &opts.socket {
        let _ = std::fs::remove_file(s);
    }
    Ok(())
}
