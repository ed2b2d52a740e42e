use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use chrono::{Duration, TimeZone, Utc};
use panacea_core::corpus::{
    Claim, ClaimLabel, LabelProvenance, PropagationTree, RumourClass, RumourLabel, Store, TweetNode,
};
use panacea_service::demo::{write_demo_corpus, DemoFiles};
use serde_json::Value;
use tempfile::TempDir;

fn panacea(data_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_panacea"))
        .arg("--data-dir")
        .arg(data_dir)
        .args(args)
        .env_remove("PANACEA_CONFIG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

struct Workspace {
    tmp: TempDir,
    files: DemoFiles,
}

impl Workspace {
    fn new() -> Self {
        let tmp = tempfile::tempdir().unwrap();
        let files = write_demo_corpus(tmp.path().join("input")).unwrap();
        Workspace { tmp, files }
    }

    fn data(&self) -> PathBuf {
        self.tmp.path().join("data")
    }

    fn path(&self, name: &str) -> PathBuf {
        self.tmp.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        panacea(&self.data(), args)
    }

    fn ingest_demo(&self) {
        for (kind, path) in [("docs", &self.files.documents), ("claims", &self.files.claims), ("trees", &self.files.trees)] {
            let o = self.run(&["ingest", kind, path.to_str().unwrap()]);
            assert_eq!(code(&o), 0, "{}", stdout(&o));
        }
    }
}

fn words(n: usize, word: &str) -> String {
    vec![word; n].join(" ")
}

fn write_lines<T: serde::Serialize>(path: &Path, records: &[T]) {
    let mut f = std::fs::File::create(path).unwrap();
    for r in records {
        writeln!(f, "{}", serde_json::to_string(r).unwrap()).unwrap();
    }
}

#[test]
fn ingest_reports_counts_and_failures() {
    let ws = Workspace::new();
    let docs = ws.path("two.jsonl");
    let doc = |id: &str, n: usize| {
        serde_json::json!({
            "doc_id": id, "title": id, "body": words(n, "virus"), "source": "s", "doc_type": "news",
            "url": "http://x", "date": "2020-03-01"
        })
    };
    write_lines(&docs, &[doc("d1", 700), doc("d2", 450)]);
    let report = ws.path("report.json");
    let o = ws.run(&["--report", report.to_str().unwrap(), "ingest", "docs", docs.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "2 documents, 5 paragraphs");
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["exit_code"], 0);
    assert_eq!(r["details"]["paragraphs"], 5);

    let o = ws.run(&["ingest", "docs", docs.to_str().unwrap()]);
    assert_eq!(stdout(&o).trim(), "0 documents, 0 paragraphs, 2 duplicates");

    let o = ws.run(&["ingest", "docs", ws.path("missing.jsonl").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).starts_with("error:"));

    std::fs::write(ws.path("bad.jsonl"), "{not json}\n").unwrap();
    assert_eq!(code(&ws.run(&["ingest", "claims", ws.path("bad.jsonl").to_str().unwrap()])), 2);

    let o = ws.run(&["ingest", "trees", ws.files.trees.to_str().unwrap(), "--min-size", "5"]);
    assert_eq!(code(&o), 0);
    let store = Store::open(ws.data()).unwrap();
    let small = store.trees().iter().filter(|t| t.size() < 5).count();
    assert_eq!(small, 0);
    let expected_rejected = 30 - store.trees().len();
    assert!(stdout(&o).contains(&format!("{} trees accepted, {expected_rejected} rejected", store.trees().len())));
}

#[test]
fn usage_and_config_errors_exit_one() {
    let ws = Workspace::new();
    assert_eq!(code(&ws.run(&["frobnicate"])), 1);
    assert_eq!(code(&ws.run(&["ingest", "films", "x"])), 1);
    assert_eq!(code(&ws.run(&["--help"])), 0);

    let config = ws.path("bad.toml");
    std::fs::write(&config, "no_such_key = 1\n").unwrap();
    let o = ws.run(&["--config", config.to_str().unwrap(), "index", "stats"]);
    assert_eq!(code(&o), 1);
    let o = Command::new(env!("CARGO_BIN_EXE_panacea"))
        .args(["precompute"])
        .env("PANACEA_CONFIG", &config)
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);

    std::fs::write(&config, "slots = 0\n").unwrap();
    assert_eq!(code(&ws.run(&["--config", config.to_str().unwrap(), "serve"])), 1);
}

#[test]
fn index_build_and_stats() {
    let ws = Workspace::new();
    assert_eq!(code(&ws.run(&["index", "build"])), 2);
    assert_eq!(code(&ws.run(&["index", "stats"])), 2);
    ws.ingest_demo();

    let o = ws.run(&["index", "build"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let report = ws.path("stats.json");
    let stats = |ws: &Workspace| {
        let o = ws.run(&["--report", report.to_str().unwrap(), "index", "stats"]);
        assert_eq!(code(&o), 0);
        let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
        (stdout(&o), r["details"].clone())
    };
    let (first, details) = stats(&ws);

    let store = Store::open(ws.data()).unwrap();
    let index = panacea_service::engine::paragraph_index(&store).unwrap();
    assert_eq!(details["paragraphs"]["units"], store.paragraphs().len());
    assert_eq!(details["paragraphs"]["avg_length"].as_f64().unwrap(), index.avg_doc_length());
    assert_eq!(details["trees"]["units"], store.trees().len());
    assert!(first.starts_with(&format!("paragraphs: {} units", store.paragraphs().len())));

    assert_eq!(code(&ws.run(&["index", "build"])), 0);
    assert_eq!(stats(&ws).0, first);

    let o = ws.run(&["search", "vitamin c", "-k", "3"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).trim_end().ends_with("3 hits"));
}

#[test]
fn train_writes_deterministic_checkpoints() {
    let ws = Workspace::new();
    ws.ingest_demo();
    let a = ws.path("models/a.ckpt");
    let b = ws.path("models/b.ckpt");
    for out in [&a, &b] {
        let o = ws.run(&["train", "nlisan", "--epochs", "20", "--lr", "0.01", "--seed", "4", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stdout(&o));
        assert!(stdout(&o).contains("nlisan: 5 examples"));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let o = ws.run(&["train", "nlisan", "--epochs", "5", "--from", a.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let o = ws.run(&["train", "nlisan", "--epochs", "5", "--seed", "9", "--gradcheck", "--out", b.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let line = stdout(&o);
    let err: f64 = line.split("gradcheck max relative error ").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    assert!(err < 1e-4, "{line}");

    let rumour = ws.path("models/r.ckpt");
    let o = ws.run(&["train", "bigcn", "--epochs", "10", "--lr", "0.01", "--gradcheck", "--out", rumour.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("bigcn: 30 trees"));
    // A checkpoint of the other model is refused.
    let o = ws.run(&["train", "nlisan", "--from", rumour.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(code(&o), 2);

    let empty = ws.path("unlabelled.jsonl");
    let claim = Claim {
        claim_id: "u1".into(),
        text: "vitamin c cures coronavirus".into(),
        label: ClaimLabel::Unlabelled,
        source: String::new(),
        subtype: String::new(),
    };
    write_lines(&empty, &[claim]);
    let o = ws.run(&["train", "nlisan", "--data", empty.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let o = ws.run(&["train", "bigcn", "--epochs", "0", "--out", b.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
}

#[test]
fn retrieval_eval_scores_perfect_judgments() {
    let ws = Workspace::new();
    ws.ingest_demo();
    let store = Store::open(ws.data()).unwrap();
    // Every paragraph holding the rarest term is judged relevant, so both
    // pipelines rank only relevant units.
    let index = panacea_service::engine::paragraph_index(&store).unwrap();
    let (term, df) = index.terms().min_by_key(|&(t, df)| (df, t.to_string())).unwrap();
    let relevant: Vec<String> = index.search(term, 1000).into_iter().map(|(id, _)| id).collect();
    assert_eq!(relevant.len(), df);
    let queries = ws.path("judged.jsonl");
    let judged = serde_json::json!({ "query": term, "relevant": relevant });
    std::fs::write(&queries, format!("{judged}\n")).unwrap();
    let report = ws.path("ap.json");
    let o = ws.run(&["--report", report.to_str().unwrap(), "eval", "retrieval", "--queries", queries.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let rows = r["details"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert_eq!(row["queries"], 1);
        for k in ["5", "10", "20", "100"] {
            assert_eq!(row["ap"][k], 1.0, "{row}");
        }
    }
    assert_eq!(code(&ws.run(&["eval", "ap", "--queries", queries.to_str().unwrap()])), 0);

    std::fs::write(&queries, "").unwrap();
    assert_eq!(code(&ws.run(&["eval", "retrieval", "--queries", queries.to_str().unwrap()])), 2);
}

fn labelled_tree(id: &str, chain: bool, text: &str, size: usize, class: RumourClass) -> PropagationTree {
    let start = Utc.with_ymd_and_hms(2020, 3, 1, 0, 0, 0).unwrap();
    let name = |i: usize| if i == 0 { id.to_string() } else { format!("{id}-{i}") };
    let nodes = (0..size)
        .map(|i| TweetNode {
            tweet_id: name(i),
            parent_id: (i > 0).then(|| name(if chain { i - 1 } else { 0 })),
            user_id: format!("u{i}"),
            post_time: start + Duration::minutes(i as i64),
            text: text.to_string(),
            location: None,
            retweet_count: 0,
        })
        .collect();
    PropagationTree {
        tree_id: id.to_string(),
        nodes,
        claim_ref: None,
        stance_label: None,
        rumour_label: Some(RumourLabel { class, provenance: LabelProvenance::Annotated }),
        rumour_prob: None,
    }
}

/// Rumours spread as chains of hoax talk, non-rumours as stars of official
/// reports. `swap` exchanges the structure and wording between the classes.
fn tree_set(path: &Path, prefix: &str, count: usize, swap: bool) {
    let mut store = Store::in_memory();
    for i in 0..count {
        let rumour = i % 2 == 0;
        let hoax_like = rumour != swap;
        let text = if hoax_like { "fake hoax lie scam" } else { "official confirmed report study" };
        let class = if rumour { RumourClass::Rumour } else { RumourClass::NonRumour };
        store.add_tree(labelled_tree(&format!("{prefix}{i}"), hoax_like, text, 5 + i % 4, class)).unwrap();
    }
    store.export_trees(path).unwrap();
}

#[test]
fn rumour_eval_shows_cross_distribution_drop() {
    let ws = Workspace::new();
    let (train, inside, shifted) = (ws.path("a.jsonl"), ws.path("a_test.jsonl"), ws.path("b.jsonl"));
    tree_set(&train, "a", 40, false);
    tree_set(&inside, "t", 20, false);
    tree_set(&shifted, "b", 20, true);
    let model = ws.path("bigcn.ckpt");
    let o = ws.run(&["train", "bigcn", "--data", train.to_str().unwrap(), "--epochs", "40", "--lr", "0.01", "--out", model.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));

    let report = ws.path("cross.json");
    let o = ws.run(&[
        "--report",
        report.to_str().unwrap(),
        "eval",
        "rumour",
        "--model",
        model.to_str().unwrap(),
        "--train-set",
        "A",
        "--test",
        &format!("A-test={}", inside.display()),
        "--test",
        shifted.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let rows = r["details"].as_array().unwrap();
    assert_eq!((rows[0]["test_set"].as_str(), rows[1]["test_set"].as_str()), (Some("A-test"), Some("b")));
    assert!(rows.iter().all(|row| row["train_set"] == "A" && row["per_class"].as_array().unwrap().len() == 2));
    let (a, b) = (rows[0]["accuracy"].as_f64().unwrap(), rows[1]["accuracy"].as_f64().unwrap());
    assert!(a > b, "{a} vs {b}");

    let unlabelled = ws.path("none.jsonl");
    std::fs::write(&unlabelled, "").unwrap();
    let o = ws.run(&["eval", "rumour", "--model", model.to_str().unwrap(), "--test", unlabelled.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn precompute_counts_claims_and_is_idempotent() {
    let ws = Workspace::new();
    for (kind, path) in [("docs", &ws.files.documents), ("trees", &ws.files.trees)] {
        assert_eq!(code(&ws.run(&["ingest", kind, path.to_str().unwrap()])), 0);
    }
    let claims: Vec<Claim> = std::fs::read_to_string(&ws.files.claims)
        .unwrap()
        .lines()
        .take(3)
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    let three = ws.path("three.jsonl");
    write_lines(&three, &claims);
    assert_eq!(code(&ws.run(&["ingest", "claims", three.to_str().unwrap()])), 0);

    let config = ws.path("fast.toml");
    std::fs::write(&config, "[panels]\nlda_iterations = 50\n").unwrap();
    for _ in 0..2 {
        let o = ws.run(&["--config", config.to_str().unwrap(), "precompute"]);
        assert_eq!(code(&o), 0, "{}", stdout(&o));
        assert_eq!(stdout(&o).trim(), "3 precomputed");
    }
    let lines = std::fs::read_to_string(ws.data().join("precomputed.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 6);
}

#[test]
fn serve_answers_health_and_fails_on_busy_port() {
    let ws = Workspace::new();
    ws.ingest_demo();

    let busy = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = busy.local_addr().unwrap().to_string();
    let o = ws.run(&["serve", "--bind", &addr]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).contains("cannot bind"));
    drop(busy);

    let mut child = Command::new(env!("CARGO_BIN_EXE_panacea"))
        .arg("--data-dir")
        .arg(ws.data())
        .args(["serve", "--bind", "127.0.0.1:0"])
        .env_remove("PANACEA_CONFIG")
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.trim().strip_prefix("listening on ").unwrap_or_else(|| panic!("{line}")).to_string();

    let mut stream = TcpStream::connect(&addr).unwrap();
    write!(stream, "GET /api/health HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.contains("\"claims\":5"), "{response}");
}
