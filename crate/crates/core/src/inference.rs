//! Natural-language-inference stance triplets.
//!
//! A [`NliProvider`] maps a (premise, hypothesis) pair to probabilities of
//! contradiction, neutrality and entailment. Evidence and tweets are the
//! premise; the claim is the hypothesis.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::mpsc;
use std::sync::{Mutex, OnceLock};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::content_tokens;

const NEGATION_CUES_ASSET: &str = include_str!("../assets/negation_cues.txt");

/// Lower bound applied to every component of a built-in triplet.
pub const PROBABILITY_FLOOR: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum InferenceError {
    #[error("invalid triplet ({0}, {1}, {2}): components must be finite, non-negative and sum to 1")]
    InvalidTriplet(f64, f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NliTriplet {
    pub p_contradiction: f64,
    pub p_neutral: f64,
    pub p_entailment: f64,
}

impl NliTriplet {
    /// The triplet used for empty evidence slots.
    pub const NEUTRAL: NliTriplet = NliTriplet { p_contradiction: 0.0, p_neutral: 1.0, p_entailment: 0.0 };

    pub fn new(p_contradiction: f64, p_neutral: f64, p_entailment: f64) -> Result<Self, InferenceError> {
        let t = NliTriplet { p_contradiction, p_neutral, p_entailment };
        t.validate(1e-6)?;
        Ok(t)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.p_contradiction, self.p_neutral, self.p_entailment]
    }

    fn validate(&self, tol: f64) -> Result<(), InferenceError> {
        let a = self.as_array();
        let ok = a.iter().all(|p| p.is_finite() && *p >= 0.0) && (a.iter().sum::<f64>() - 1.0).abs() <= tol;
        if ok {
            Ok(())
        } else {
            Err(InferenceError::InvalidTriplet(a[0], a[1], a[2]))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stance {
    Support,
    Neutral,
    Refute,
}

/// Argmax with contradiction→Refute, entailment→Support, neutral→Neutral.
/// Ties go Refute, then Support, then Neutral.
pub fn stance_of(triplet: &NliTriplet) -> Result<Stance, InferenceError> {
    triplet.validate(1e-6)?;
    let [c, n, e] = triplet.as_array();
    Ok(if c >= e && c >= n {
        Stance::Refute
    } else if e >= n {
        Stance::Support
    } else {
        Stance::Neutral
    })
}

pub trait NliProvider: Send + Sync {
    fn infer(&self, premise: &str, hypothesis: &str) -> NliTriplet;
}

/// Lexical stand-in for a trained NLI model: content-token overlap decides
/// relatedness, negation-cue parity decides polarity.
#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinNli;

impl NliProvider for BuiltinNli {
    fn infer(&self, premise: &str, hypothesis: &str) -> NliTriplet {
        builtin_nli(premise, hypothesis)
    }
}

pub fn builtin_nli(premise: &str, hypothesis: &str) -> NliTriplet {
    let overlap = overlap_ratio(premise, hypothesis);
    let parity = (negation_count(premise) + negation_count(hypothesis)) % 2;
    let g = parity as f64;
    let raw = [overlap * g, 1.0 - overlap, overlap * (1.0 - g)];
    let [c, n, e] = floor_and_normalize(raw, PROBABILITY_FLOOR);
    NliTriplet { p_contradiction: c, p_neutral: n, p_entailment: e }
}

/// |P ∩ H| / |H| over distinct content tokens, negation cues excluded.
fn overlap_ratio(premise: &str, hypothesis: &str) -> f64 {
    let cues = negation_cues();
    let set = |t: &str| -> HashSet<String> {
        content_tokens(t).into_iter().filter(|w| !cues.words.contains(w.as_str())).collect()
    };
    let p = set(premise);
    let h = set(hypothesis);
    if h.is_empty() {
        return 0.0;
    }
    h.intersection(&p).count() as f64 / h.len() as f64
}

struct NegationCues {
    words: HashSet<&'static str>,
    suffixes: Vec<&'static str>,
}

fn negation_cues() -> &'static NegationCues {
    static CUES: OnceLock<NegationCues> = OnceLock::new();
    CUES.get_or_init(|| {
        let mut words = HashSet::new();
        let mut suffixes = Vec::new();
        for line in NEGATION_CUES_ASSET.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line.starts_with("n'") {
                suffixes.push(line);
            } else {
                words.insert(line);
            }
        }
        NegationCues { words, suffixes }
    })
}

/// Counts negation cues over whitespace-separated words. Words are
/// lowercased, curly apostrophes normalised, and surrounding punctuation
/// stripped; suffix cues such as "n't" match word endings.
pub fn negation_count(text: &str) -> usize {
    let cues = negation_cues();
    text.split_whitespace()
        .map(|w| {
            w.to_lowercase()
                .replace('\u{2019}', "'")
                .trim_matches(|c: char| !c.is_alphanumeric() && c != '\'')
                .to_string()
        })
        .filter(|w| cues.words.contains(w.as_str()) || cues.suffixes.iter().any(|s| w.ends_with(s)))
        .count()
}

/// Normalizes to a distribution and lifts every component to at least
/// `floor`, rescaling the unclamped components so the sum stays 1.
fn floor_and_normalize(raw: [f64; 3], floor: f64) -> [f64; 3] {
    let total: f64 = raw.iter().map(|x| x.max(0.0)).sum();
    let mut p = if total > 0.0 { raw.map(|x| x.max(0.0) / total) } else { [1.0 / 3.0; 3] };
    let mut clamped = [false; 3];
    loop {
        let mut changed = false;
        for i in 0..3 {
            if !clamped[i] && p[i] < floor {
                clamped[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let fixed = floor * clamped.iter().filter(|c| **c).count() as f64;
        let free: f64 = (0..3).filter(|&i| !clamped[i]).map(|i| p[i]).sum();
        for i in 0..3 {
            p[i] = if clamped[i] { floor } else { p[i] * (1.0 - fixed) / free };
        }
    }
    p
}

/// Stance of each tweet towards `claim`, in input order.
pub fn tweet_stances<S: AsRef<str>>(claim: &str, tweets: &[S], provider: &dyn NliProvider) -> Vec<Stance> {
    tweets
        .iter()
        .map(|t| {
            let triplet = provider.infer(t.as_ref(), claim);
            stance_of(&triplet).unwrap_or(Stance::Neutral)
        })
        .collect()
}

/// Wire request of the external provider protocol: one JSON object per line.
#[derive(Debug, Serialize, Deserialize)]
pub struct ExternalNliRequest {
    pub premise: String,
    pub hypothesis: String,
}

/// Wire response: three decimal probabilities.
#[derive(Debug, Serialize, Deserialize)]
pub struct ExternalNliResponse {
    pub contradiction: f64,
    pub neutral: f64,
    pub entailment: f64,
}

struct Pipe {
    child: Child,
    stdin: ChildStdin,
    responses: mpsc::Receiver<std::io::Result<String>>,
}

/// Talks to an NLI model running as a subprocess over stdin/stdout, one
/// request and response line per pair. Any failure (spawn, timeout, bad
/// response) falls back to [`BuiltinNli`] and is logged.
pub struct SubprocessNli {
    program: String,
    args: Vec<String>,
    timeout: Duration,
    pipe: Mutex<Option<Pipe>>,
}

impl SubprocessNli {
    pub fn new(program: impl Into<String>, args: Vec<String>, timeout: Duration) -> Self {
        SubprocessNli { program: program.into(), args, timeout, pipe: Mutex::new(None) }
    }

    fn spawn(&self) -> std::io::Result<Pipe> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout: ChildStdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            let mut reader = BufReader::new(stdout);
            loop {
                let mut line = String::new();
                match reader.read_line(&mut line) {
                    Ok(0) => break,
                    Ok(_) => {
                        if tx.send(Ok(line)).is_err() {
                            break;
                        }
                    }
                    Err(e) => {
                        let _ = tx.send(Err(e));
                        break;
                    }
                }
            }
        });
        Ok(Pipe { child, stdin, responses: rx })
    }

    fn try_infer(&self, premise: &str, hypothesis: &str) -> Result<NliTriplet, String> {
        let mut guard = self.pipe.lock().unwrap_or_else(|e| e.into_inner());
        if guard.is_none() {
            *guard = Some(self.spawn().map_err(|e| format!("spawn failed: {e}"))?);
        }
        let pipe = guard.as_mut().unwrap();
        let req = serde_json::to_string(&ExternalNliRequest { premise: premise.into(), hypothesis: hypothesis.into() })
            .expect("request serializes");
        let result = writeln!(pipe.stdin, "{req}")
            .and_then(|_| pipe.stdin.flush())
            .map_err(|e| format!("write failed: {e}"))
            .and_then(|_| match pipe.responses.recv_timeout(self.timeout) {
                Ok(Ok(line)) => Ok(line),
                Ok(Err(e)) => Err(format!("read failed: {e}")),
                Err(_) => Err("timed out".to_string()),
            })
            .and_then(|line| {
                let r: ExternalNliResponse =
                    serde_json::from_str(line.trim()).map_err(|e| format!("bad response: {e}"))?;
                NliTriplet::new(r.contradiction, r.neutral, r.entailment).map_err(|e| e.to_string())
            });
        if result.is_err() {
            // Drop the pipe so the next call starts a fresh process.
            if let Some(mut p) = guard.take() {
                let _ = p.child.kill();
                let _ = p.child.wait();
            }
        }
        result
    }
}

impl NliProvider for SubprocessNli {
    fn infer(&self, premise: &str, hypothesis: &str) -> NliTriplet {
        match self.try_infer(premise, hypothesis) {
            Ok(t) => t,
            Err(reason) => {
                tracing::warn!(program = %self.program, %reason, "external NLI failed, using built-in");
                builtin_nli(premise, hypothesis)
            }
        }
    }
}

impl Drop for SubprocessNli {
    fn drop(&mut self) {
        if let Ok(mut guard) = self.pipe.lock() {
            if let Some(mut p) = guard.take() {
                let _ = p.child.kill();
                let _ = p.child.wait();
            }
        }
    }
}
