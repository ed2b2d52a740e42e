use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::jobs::JobKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub client_id: String,
    pub kind: JobKind,
    pub claim: String,
    pub result: Value,
    pub expires_at: DateTime<Utc>,
}

/// Last result per (client, kind). An entry lives until it expires or the
/// client searches for a different claim.
#[derive(Debug, Default)]
pub struct ResultCache {
    entries: HashMap<(String, JobKind), CacheEntry>,
    path: Option<PathBuf>,
}

impl ResultCache {
    pub fn in_memory() -> Self {
        ResultCache::default()
    }

    /// Loads a persisted cache, or starts empty when the file does not exist.
    pub fn open(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut cache = ResultCache { entries: HashMap::new(), path: Some(path.clone()) };
        if path.exists() {
            let list: Vec<CacheEntry> = serde_json::from_slice(&fs::read(&path)?)?;
            for e in list {
                cache.entries.insert((e.client_id.clone(), e.kind), e);
            }
        }
        Ok(cache)
    }

    pub fn lookup(&self, client_id: &str, kind: JobKind, claim: &str, now: DateTime<Utc>) -> Option<&Value> {
        self.entries
            .get(&(client_id.to_string(), kind))
            .filter(|e| e.claim == claim && now < e.expires_at)
            .map(|e| &e.result)
    }

    pub fn entry(&self, client_id: &str, kind: JobKind) -> Option<&CacheEntry> {
        self.entries.get(&(client_id.to_string(), kind))
    }

    /// Drops the client's entry if it holds a different claim, or has expired.
    pub fn note_search(&mut self, client_id: &str, kind: JobKind, claim: &str, now: DateTime<Utc>) -> bool {
        let key = (client_id.to_string(), kind);
        let stale = self.entries.get(&key).is_some_and(|e| e.claim != claim || now >= e.expires_at);
        if stale {
            self.entries.remove(&key);
            self.persist();
        }
        stale
    }

    pub fn insert(&mut self, entry: CacheEntry) {
        self.entries.insert((entry.client_id.clone(), entry.kind), entry);
        self.persist();
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn persist(&self) {
        let Some(path) = &self.path else { return };
        let mut list: Vec<&CacheEntry> = self.entries.values().collect();
        list.sort_by(|a, b| (&a.client_id, a.kind).cmp(&(&b.client_id, b.kind)));
        let write = || -> std::io::Result<()> {
            let tmp = path.with_extension("tmp");
            fs::File::create(&tmp)?.write_all(&serde_json::to_vec(&list)?)?;
            fs::rename(&tmp, path)
        };
        if let Err(e) = write() {
            tracing::warn!("could not persist result cache to {}: {e}", path.display());
        }
    }
}

/// Results computed ahead of time for dataset claims, keyed by exact text.
#[derive(Debug, Default)]
pub struct PrecomputedStore {
    results: HashMap<(JobKind, String), Value>,
    path: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct PrecomputedRecord {
    kind: JobKind,
    claim: String,
    result: Value,
}

impl PrecomputedStore {
    pub fn in_memory() -> Self {
        PrecomputedStore::default()
    }

    /// Append-only line records; a later record for the same key wins.
    pub fn open(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut store = PrecomputedStore { results: HashMap::new(), path: Some(path.clone()) };
        if path.exists() {
            for line in fs::read_to_string(&path)?.lines().filter(|l| !l.trim().is_empty()) {
                let r: PrecomputedRecord = serde_json::from_str(line)?;
                store.results.insert((r.kind, r.claim), r.result);
            }
        }
        Ok(store)
    }

    pub fn get(&self, kind: JobKind, claim: &str) -> Option<&Value> {
        self.results.get(&(kind, claim.to_string()))
    }

    pub fn put(&mut self, kind: JobKind, claim: &str, result: Value) -> std::io::Result<()> {
        if self.get(kind, claim) == Some(&result) {
            return Ok(());
        }
        if let Some(path) = &self.path {
            let record = PrecomputedRecord { kind, claim: claim.to_string(), result: result.clone() };
            let mut f = fs::OpenOptions::new().create(true).append(true).open(path)?;
            writeln!(f, "{}", serde_json::to_string(&record)?)?;
        }
        self.results.insert((kind, claim.to_string()), result);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.results.len()
    }

    pub fn is_empty(&self) -> bool {
        self.results.is_empty()
    }
}
