#![allow(dead_code)]

use std::path::Path;

use panacea_core::corpus::Store;
use panacea_service::demo::write_demo_corpus;

pub fn demo_store(dir: &Path) -> Store {
    let files = write_demo_corpus(dir.join("input")).unwrap();
    let mut store = Store::open(dir.join("store")).unwrap();
    store.ingest_documents(&files.documents).unwrap();
    store.ingest_claims(&files.claims).unwrap();
    store.ingest_trees(&files.trees, 5).unwrap();
    store
}

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};

use panacea_service::engine::Engine;
use panacea_service::jobs::JobKind;
use serde_json::{json, Value};

/// Records every execution; optionally holds each run until the gate opens
/// and fails claims containing "fail" (or panics on "panic").
#[derive(Default)]
pub struct RecordingEngine {
    pub runs: Mutex<Vec<String>>,
    pub in_flight: AtomicUsize,
    pub max_in_flight: AtomicUsize,
    gate: Mutex<bool>,
    gate_cv: Condvar,
    gated: bool,
}

impl RecordingEngine {
    pub fn open() -> Self {
        RecordingEngine::default()
    }

    pub fn gated() -> Self {
        RecordingEngine { gated: true, ..Default::default() }
    }

    pub fn release(&self) {
        *self.gate.lock().unwrap() = true;
        self.gate_cv.notify_all();
    }

    pub fn runs(&self) -> Vec<String> {
        self.runs.lock().unwrap().clone()
    }
}

impl Engine for RecordingEngine {
    fn run(&self, kind: JobKind, claim: &str) -> Result<Value, String> {
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.max_in_flight.fetch_max(now, Ordering::SeqCst);
        if self.gated {
            let mut open = self.gate.lock().unwrap();
            while !*open {
                open = self.gate_cv.wait(open).unwrap();
            }
        }
        self.runs.lock().unwrap().push(claim.to_string());
        self.in_flight.fetch_sub(1, Ordering::SeqCst);
        if claim.contains("panic") {
            panic!("engine blew up on {claim}");
        }
        if claim.contains("fail") {
            return Err(format!("cannot handle {claim}"));
        }
        Ok(json!({ "kind": format!("{kind:?}"), "claim": claim }))
    }
}

use std::io::{Read, Write as _};
use std::net::{SocketAddr, TcpStream};

use panacea_service::api::{serve, AppState};

pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

impl HttpResponse {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.body).unwrap_or_else(|e| panic!("body is not JSON ({e}): {}", self.body))
    }
}

/// Minimal HTTP/1.1 client over a plain socket.
pub fn http(addr: SocketAddr, method: &str, path: &str, headers: &[(&str, &str)], body: Option<&str>) -> HttpResponse {
    let mut stream = TcpStream::connect(addr).unwrap();
    stream.set_read_timeout(Some(std::time::Duration::from_secs(30))).unwrap();
    let body = body.unwrap_or("");
    let mut req = format!("{method} {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\nContent-Length: {}\r\n", body.len());
    if !body.is_empty() {
        req.push_str("Content-Type: application/json\r\n");
    }
    for (k, v) in headers {
        req.push_str(&format!("{k}: {v}\r\n"));
    }
    req.push_str("\r\n");
    req.push_str(body);
    stream.write_all(req.as_bytes()).unwrap();
    let mut raw = Vec::new();
    stream.read_to_end(&mut raw).unwrap();
    let text = String::from_utf8(raw).unwrap();
    let (head, rest) = text.split_once("\r\n\r\n").expect("response has a header block");
    let status = head.split_whitespace().nth(1).unwrap().parse().unwrap();
    let chunked = head.lines().any(|l| l.to_ascii_lowercase().starts_with("transfer-encoding: chunked"));
    let body = if chunked { dechunk(rest) } else { rest.to_string() };
    HttpResponse { status, body }
}

fn dechunk(mut s: &str) -> String {
    let mut out = String::new();
    loop {
        let (size, rest) = s.split_once("\r\n").unwrap();
        let n = usize::from_str_radix(size.trim(), 16).unwrap();
        if n == 0 {
            return out;
        }
        out.push_str(&rest[..n]);
        s = &rest[n + 2..];
    }
}

pub struct Server {
    pub addr: SocketAddr,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl Drop for Server {
    fn drop(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

pub fn spawn_server(state: AppState) -> Server {
    let (addr_tx, addr_rx) = std::sync::mpsc::channel();
    let (stop_tx, stop_rx) = tokio::sync::oneshot::channel::<()>();
    let thread = std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            addr_tx.send(listener.local_addr().unwrap()).unwrap();
            serve(listener, state, async {
                let _ = stop_rx.await;
            })
            .await
            .unwrap();
        });
    });
    Server { addr: addr_rx.recv().unwrap(), stop: Some(stop_tx), thread: Some(thread) }
}
