use std::collections::{HashMap, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, Condvar, Mutex, RwLock};
use std::thread::JoinHandle;
use std::time::{Duration as StdDuration, Instant};

use chrono::{DateTime, Duration, Utc};
use panacea_core::corpus::Claim;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::cache::{CacheEntry, PrecomputedStore, ResultCache};
use crate::clock::Clock;
use crate::engine::Engine;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum JobKind {
    FactCheck,
    Rumour,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JobState {
    Queued,
    Running,
    Done,
    Failed,
}

/// Where a Done job's result came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResultSource {
    Computed,
    Cache,
    Precomputed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub job_id: String,
    pub client_id: String,
    pub kind: JobKind,
    pub claim: String,
    pub state: JobState,
    pub submitted_at: DateTime<Utc>,
    pub started_at: Option<DateTime<Utc>>,
    pub finished_at: Option<DateTime<Utc>>,
    pub result: Option<Value>,
    pub error: Option<String>,
    pub source: Option<ResultSource>,
    /// Jobs ahead of this one while queued.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub queue_position: Option<usize>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ServiceError {
    #[error("claim text is empty")]
    EmptyClaim,
    #[error("queue is full")]
    QueueFull,
    #[error("unknown job {0}")]
    UnknownJob(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceOptions {
    pub slots: usize,
    pub queue_bound: usize,
    pub ttl: Duration,
}

impl Default for ServiceOptions {
    fn default() -> Self {
        ServiceOptions { slots: 1, queue_bound: 1000, ttl: Duration::seconds(3600) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PoolStatus {
    pub slots: usize,
    pub in_use: usize,
    pub queued: usize,
    /// Highest `in_use` seen since start.
    pub peak_in_use: usize,
}

#[derive(Default)]
struct State {
    jobs: HashMap<String, Job>,
    queue: VecDeque<String>,
    in_use: usize,
    peak_in_use: usize,
    next_id: u64,
    shutdown: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PrecomputeReport {
    pub claims: usize,
    /// Claims with both a fact-check and a rumour result stored.
    pub precomputed: usize,
    pub failures: Vec<PrecomputeFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrecomputeFailure {
    pub claim_id: String,
    pub kind: JobKind,
    pub error: String,
}

/// Job queue, worker pool and result caches. Each worker thread holds one
/// compute slot, so at most `slots` jobs run at once; jobs start in
/// submission order.
pub struct Service {
    options: ServiceOptions,
    clock: Arc<dyn Clock>,
    engine: RwLock<Arc<dyn Engine>>,
    state: Mutex<State>,
    work_ready: Condvar,
    job_finished: Condvar,
    cache: Mutex<ResultCache>,
    precomputed: RwLock<PrecomputedStore>,
}

impl Service {
    pub fn new(options: ServiceOptions, engine: Arc<dyn Engine>, clock: Arc<dyn Clock>) -> Self {
        Service::with_stores(options, engine, clock, ResultCache::in_memory(), PrecomputedStore::in_memory())
    }

    pub fn with_stores(
        options: ServiceOptions,
        engine: Arc<dyn Engine>,
        clock: Arc<dyn Clock>,
        cache: ResultCache,
        precomputed: PrecomputedStore,
    ) -> Self {
        assert!(options.slots >= 1, "at least one compute slot is required");
        Service {
            options,
            clock,
            engine: RwLock::new(engine),
            state: Mutex::new(State::default()),
            work_ready: Condvar::new(),
            job_finished: Condvar::new(),
            cache: Mutex::new(cache),
            precomputed: RwLock::new(precomputed),
        }
    }

    pub fn options(&self) -> ServiceOptions {
        self.options
    }

    pub fn set_engine(&self, engine: Arc<dyn Engine>) {
        *self.engine.write().unwrap() = engine;
    }

    pub fn engine(&self) -> Arc<dyn Engine> {
        self.engine.read().unwrap().clone()
    }

    fn new_job(&self, state: &mut State, client_id: &str, kind: JobKind, claim: &str) -> Job {
        state.next_id += 1;
        Job {
            job_id: format!("job-{:06}", state.next_id),
            client_id: client_id.to_string(),
            kind,
            claim: claim.to_string(),
            state: JobState::Queued,
            submitted_at: self.clock.now(),
            started_at: None,
            finished_at: None,
            result: None,
            error: None,
            source: None,
            queue_position: None,
        }
    }

    fn finish_immediately(&self, client_id: &str, kind: JobKind, claim: &str, result: Value, source: ResultSource) -> String {
        let mut state = self.state.lock().unwrap();
        let mut job = self.new_job(&mut state, client_id, kind, claim);
        let now = self.clock.now();
        job.state = JobState::Done;
        job.started_at = Some(now);
        job.finished_at = Some(now);
        job.result = Some(result);
        job.source = Some(source);
        let id = job.job_id.clone();
        state.jobs.insert(id.clone(), job);
        id
    }

    /// Queues a claim, or answers at once from precomputed results or the
    /// client's cache. Resubmitting a claim the same client already has
    /// queued or running returns the existing job.
    pub fn submit(&self, client_id: &str, kind: JobKind, claim: &str) -> Result<String, ServiceError> {
        let claim = claim.trim();
        if claim.is_empty() {
            return Err(ServiceError::EmptyClaim);
        }
        let now = self.clock.now();
        let cached = {
            let mut cache = self.cache.lock().unwrap();
            cache.note_search(client_id, kind, claim, now);
            cache.lookup(client_id, kind, claim, now).cloned()
        };
        if let Some(result) = cached {
            return Ok(self.finish_immediately(client_id, kind, claim, result, ResultSource::Cache));
        }
        let precomputed = self.precomputed.read().unwrap().get(kind, claim).cloned();
        if let Some(result) = precomputed {
            self.cache_result(client_id, kind, claim, &result);
            return Ok(self.finish_immediately(client_id, kind, claim, result, ResultSource::Precomputed));
        }

        let mut state = self.state.lock().unwrap();
        let duplicate = state.jobs.values().find(|j| {
            j.client_id == client_id
                && j.kind == kind
                && j.claim == claim
                && matches!(j.state, JobState::Queued | JobState::Running)
        });
        if let Some(j) = duplicate {
            return Ok(j.job_id.clone());
        }
        if state.queue.len() >= self.options.queue_bound {
            return Err(ServiceError::QueueFull);
        }
        let job = self.new_job(&mut state, client_id, kind, claim);
        let id = job.job_id.clone();
        state.queue.push_back(id.clone());
        state.jobs.insert(id.clone(), job);
        drop(state);
        self.work_ready.notify_one();
        Ok(id)
    }

    pub fn job_status(&self, job_id: &str) -> Result<Job, ServiceError> {
        let state = self.state.lock().unwrap();
        let mut job = state.jobs.get(job_id).cloned().ok_or_else(|| ServiceError::UnknownJob(job_id.to_string()))?;
        if job.state == JobState::Queued {
            job.queue_position = state.queue.iter().position(|id| id == job_id);
        }
        Ok(job)
    }

    pub fn pool_status(&self) -> PoolStatus {
        let state = self.state.lock().unwrap();
        PoolStatus {
            slots: self.options.slots,
            in_use: state.in_use,
            queued: state.queue.len(),
            peak_in_use: state.peak_in_use,
        }
    }

    pub fn cache_lookup(&self, client_id: &str, kind: JobKind, claim: &str, now: DateTime<Utc>) -> Option<Value> {
        self.cache.lock().unwrap().lookup(client_id, kind, claim, now).cloned()
    }

    pub fn cache_len(&self) -> usize {
        self.cache.lock().unwrap().len()
    }

    fn cache_result(&self, client_id: &str, kind: JobKind, claim: &str, result: &Value) {
        self.cache.lock().unwrap().insert(CacheEntry {
            client_id: client_id.to_string(),
            kind,
            claim: claim.to_string(),
            result: result.clone(),
            expires_at: self.clock.now() + self.options.ttl,
        });
    }

    /// Starts one worker thread per compute slot.
    pub fn start_workers(self: &Arc<Self>) -> Vec<JoinHandle<()>> {
        (0..self.options.slots)
            .map(|i| {
                let svc = Arc::clone(self);
                std::thread::Builder::new()
                    .name(format!("panacea-worker-{i}"))
                    .spawn(move || svc.worker_loop())
                    .expect("spawn worker thread")
            })
            .collect()
    }

    /// Stops workers once their current job is finished. Queued jobs stay queued.
    pub fn shutdown(&self) {
        self.state.lock().unwrap().shutdown = true;
        self.work_ready.notify_all();
    }

    fn next_job(&self) -> Option<(String, String, JobKind, String)> {
        let mut state = self.state.lock().unwrap();
        loop {
            if state.shutdown {
                return None;
            }
            if let Some(id) = state.queue.pop_front() {
                state.in_use += 1;
                assert!(state.in_use <= self.options.slots, "slot accounting broken");
                state.peak_in_use = state.peak_in_use.max(state.in_use);
                let now = self.clock.now();
                let job = state.jobs.get_mut(&id).expect("queued job exists");
                job.state = JobState::Running;
                job.started_at = Some(now);
                return Some((id, job.client_id.clone(), job.kind, job.claim.clone()));
            }
            state = self.work_ready.wait(state).unwrap();
        }
    }

    fn worker_loop(&self) {
        while let Some((id, client_id, kind, claim)) = self.next_job() {
            let engine = self.engine();
            let outcome = catch_unwind(AssertUnwindSafe(|| engine.run(kind, &claim)))
                .unwrap_or_else(|_| Err("engine panicked".to_string()));
            if let Ok(result) = &outcome {
                self.cache_result(&client_id, kind, &claim, result);
            }
            let mut state = self.state.lock().unwrap();
            state.in_use -= 1;
            let now = self.clock.now();
            let job = state.jobs.get_mut(&id).expect("running job exists");
            job.finished_at = Some(now);
            match outcome {
                Ok(result) => {
                    job.state = JobState::Done;
                    job.result = Some(result);
                    job.source = Some(ResultSource::Computed);
                }
                Err(e) => {
                    tracing::warn!(job = %id, "job failed: {e}");
                    job.state = JobState::Failed;
                    job.error = Some(e);
                }
            }
            drop(state);
            self.job_finished.notify_all();
        }
    }

    /// Blocks until the job is Done or Failed, or the timeout passes.
    pub fn wait_for(&self, job_id: &str, timeout: StdDuration) -> Result<Job, ServiceError> {
        let deadline = Instant::now() + timeout;
        let mut state = self.state.lock().unwrap();
        loop {
            let job = state.jobs.get(job_id).ok_or_else(|| ServiceError::UnknownJob(job_id.to_string()))?;
            if matches!(job.state, JobState::Done | JobState::Failed) {
                return Ok(job.clone());
            }
            let now = Instant::now();
            if now >= deadline {
                return Ok(job.clone());
            }
            state = self.job_finished.wait_timeout(state, deadline - now).unwrap().0;
        }
    }

    /// Computes and stores both result kinds for every claim, bypassing the
    /// queue. Re-running overwrites earlier results.
    pub fn precompute_all(&self, claims: &[Claim]) -> PrecomputeReport {
        let engine = self.engine();
        let mut report = PrecomputeReport { claims: claims.len(), ..Default::default() };
        for claim in claims {
            let text = claim.text.trim();
            let mut stored = 0;
            for kind in [JobKind::FactCheck, JobKind::Rumour] {
                let outcome = catch_unwind(AssertUnwindSafe(|| engine.run(kind, text)))
                    .unwrap_or_else(|_| Err("engine panicked".to_string()))
                    .and_then(|result| self.precomputed.write().unwrap().put(kind, text, result).map_err(|e| e.to_string()));
                match outcome {
                    Ok(()) => stored += 1,
                    Err(error) => report.failures.push(PrecomputeFailure { claim_id: claim.claim_id.clone(), kind, error }),
                }
            }
            if stored == 2 {
                report.precomputed += 1;
            }
        }
        report
    }

    pub fn precomputed(&self, kind: JobKind, claim: &str) -> Option<Value> {
        self.precomputed.read().unwrap().get(kind, claim).cloned()
    }

    pub fn precomputed_len(&self) -> usize {
        self.precomputed.read().unwrap().len()
    }
}
