use std::collections::HashMap;
use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{ConnectInfo, Path, Query, State};
use axum::http::{Extensions, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use panacea_core::analytics::export_tree_graph;
use panacea_core::corpus::{Store, DEFAULT_MIN_TREE_SIZE};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::autocomplete::{autocomplete, DEFAULT_SUGGESTIONS};
use crate::cache::{PrecomputedStore, ResultCache};
use crate::clock::SystemClock;
use crate::config::ServiceConfig;
use crate::engine::{Engine, EngineError, PanaceaEngine};
use crate::jobs::{JobKind, JobState, Service, ServiceError, ServiceOptions};

pub const CLIENT_HEADER: &str = "x-client-id";
pub const ADMIN_HEADER: &str = "x-admin-token";

/// Rebuilds the engine after the store changes.
pub type EngineFactory = dyn Fn(&Store) -> Result<Arc<dyn Engine>, String> + Send + Sync;

#[derive(Clone)]
pub struct AppState {
    pub service: Arc<Service>,
    pub store: Arc<RwLock<Store>>,
    pub admin_token: Option<String>,
    pub rebuild: Option<Arc<EngineFactory>>,
}

#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error("store: {0}")]
    Store(#[from] panacea_core::corpus::CorpusError),
    #[error("engine: {0}")]
    Engine(#[from] EngineError),
    #[error("cache: {0}")]
    Cache(#[from] std::io::Error),
}

impl AppState {
    /// Opens the store and persisted caches under `data_dir` and builds the
    /// engine. Workers are not started.
    pub fn from_config(config: &ServiceConfig) -> Result<Self, StartupError> {
        let store = Store::open(&config.data_dir)?;
        let engine: Arc<dyn Engine> = Arc::new(PanaceaEngine::from_config(&store, config)?);
        let options = ServiceOptions {
            slots: config.slots,
            queue_bound: config.queue_bound,
            ttl: chrono::Duration::seconds(config.ttl_seconds as i64),
        };
        let service = Service::with_stores(
            options,
            engine,
            Arc::new(SystemClock),
            ResultCache::open(config.cache_path())?,
            PrecomputedStore::open(config.precomputed_path())?,
        );
        let cfg = config.clone();
        let rebuild: Arc<EngineFactory> = Arc::new(move |store: &Store| {
            PanaceaEngine::from_config(store, &cfg).map(|e| Arc::new(e) as Arc<dyn Engine>).map_err(|e| e.to_string())
        });
        Ok(AppState {
            service: Arc::new(service),
            store: Arc::new(RwLock::new(store)),
            admin_token: config.admin_token.clone(),
            rebuild: Some(rebuild),
        })
    }
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = match e {
            ServiceError::EmptyClaim => StatusCode::BAD_REQUEST,
            ServiceError::QueueFull => StatusCode::SERVICE_UNAVAILABLE,
            ServiceError::UnknownJob(_) => StatusCode::NOT_FOUND,
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimRequest {
    pub claim: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitResponse {
    pub job_id: String,
    pub state: JobState,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IngestKind {
    Docs,
    Claims,
    Trees,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestRequest {
    pub kind: IngestKind,
    pub path: PathBuf,
    pub min_size: Option<usize>,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/autocomplete", get(suggest))
        .route("/api/factcheck", post(submit_factcheck))
        .route("/api/factcheck/{job_id}", get(factcheck_status))
        .route("/api/rumour", post(submit_rumour))
        .route("/api/rumour/{job_id}", get(rumour_status))
        .route("/api/claims/{claim_id}", get(claim))
        .route("/api/trees/{tree_id}", get(tree))
        .route("/api/admin/ingest", post(ingest))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .with_state(state)
}

/// Serves until `shutdown` resolves. Client ids fall back to the peer IP.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state).into_make_service_with_connect_info::<SocketAddr>())
        .with_graceful_shutdown(shutdown)
        .await
}

fn client_id(headers: &HeaderMap, extensions: &Extensions) -> String {
    if let Some(id) = headers.get(CLIENT_HEADER).and_then(|v| v.to_str().ok()).filter(|v| !v.trim().is_empty()) {
        return id.trim().to_string();
    }
    extensions
        .get::<ConnectInfo<SocketAddr>>()
        .map(|ConnectInfo(addr)| addr.ip().to_string())
        .unwrap_or_else(|| "anonymous".to_string())
}

async fn health(State(state): State<AppState>) -> Json<Value> {
    let store = state.store.read().unwrap();
    Json(json!({
        "status": "ok",
        "pool": state.service.pool_status(),
        "documents": store.documents().len(),
        "claims": store.claims().len(),
        "trees": store.trees().len(),
        "precomputed": state.service.precomputed_len(),
    }))
}

async fn suggest(State(state): State<AppState>, Query(params): Query<HashMap<String, String>>) -> ApiResult<Value> {
    let q = params.get("q").map(String::as_str).unwrap_or("");
    let limit = match params.get("limit") {
        Some(l) => l.parse::<usize>().map_err(|_| ApiError::bad_request("limit must be a non-negative integer"))?,
        None => DEFAULT_SUGGESTIONS,
    };
    let store = state.store.read().unwrap();
    let hits = autocomplete(store.claims(), q, limit);
    Ok(Json(json!({ "query": q, "suggestions": hits })))
}

fn parse_json<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed request body: {e}")))
}

fn submit(state: &AppState, kind: JobKind, headers: &HeaderMap, extensions: &Extensions, body: &Bytes) -> ApiResult<SubmitResponse> {
    let req: ClaimRequest = parse_json(body)?;
    let client = client_id(headers, extensions);
    let job_id = state.service.submit(&client, kind, &req.claim)?;
    let job = state.service.job_status(&job_id)?;
    Ok(Json(SubmitResponse { job_id, state: job.state }))
}

async fn submit_factcheck(State(state): State<AppState>, headers: HeaderMap, extensions: Extensions, body: Bytes) -> ApiResult<SubmitResponse> {
    submit(&state, JobKind::FactCheck, &headers, &extensions, &body)
}

async fn submit_rumour(State(state): State<AppState>, headers: HeaderMap, extensions: Extensions, body: Bytes) -> ApiResult<SubmitResponse> {
    submit(&state, JobKind::Rumour, &headers, &extensions, &body)
}

fn status(state: &AppState, kind: JobKind, job_id: &str) -> ApiResult<Value> {
    let job = state.service.job_status(job_id)?;
    if job.kind != kind {
        return Err(ApiError::not_found(format!("unknown job {job_id}")));
    }
    Ok(Json(serde_json::to_value(job).expect("job serialises")))
}

async fn factcheck_status(State(state): State<AppState>, Path(job_id): Path<String>) -> ApiResult<Value> {
    status(&state, JobKind::FactCheck, &job_id)
}

async fn rumour_status(State(state): State<AppState>, Path(job_id): Path<String>) -> ApiResult<Value> {
    status(&state, JobKind::Rumour, &job_id)
}

async fn claim(State(state): State<AppState>, Path(claim_id): Path<String>) -> ApiResult<Value> {
    let store = state.store.read().unwrap();
    let claim = store.claim(&claim_id).ok_or_else(|| ApiError::not_found(format!("unknown claim {claim_id}")))?;
    Ok(Json(serde_json::to_value(claim).expect("claim serialises")))
}

async fn tree(State(state): State<AppState>, Path(tree_id): Path<String>) -> ApiResult<Value> {
    let store = state.store.read().unwrap();
    let tree = store.tree(&tree_id).ok_or_else(|| ApiError::not_found(format!("unknown tree {tree_id}")))?;
    let graph = export_tree_graph(tree).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(Json(json!({
        "tree_id": tree.tree_id,
        "claim_ref": tree.claim_ref,
        "stance_label": tree.stance_label,
        "rumour_label": tree.rumour_label,
        "rumour_prob": tree.rumour_prob,
        "graph": graph,
        "nodes": tree.nodes,
    })))
}

async fn ingest(State(state): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<Value> {
    let token = headers.get(ADMIN_HEADER).and_then(|v| v.to_str().ok());
    match (&state.admin_token, token) {
        (Some(expected), Some(given)) if expected == given => {}
        _ => return Err(ApiError::new(StatusCode::FORBIDDEN, "admin token missing or wrong")),
    }
    let req: IngestRequest = parse_json(&body)?;
    tokio::task::spawn_blocking(move || run_ingest(&state, req))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

fn run_ingest(state: &AppState, req: IngestRequest) -> ApiResult<Value> {
    let mut store = state.store.write().unwrap();
    let data_error = |e: panacea_core::corpus::CorpusError| ApiError::bad_request(e.to_string());
    let report = match req.kind {
        IngestKind::Docs => serde_json::to_value(store.ingest_documents(&req.path).map_err(data_error)?),
        IngestKind::Claims => serde_json::to_value(store.ingest_claims(&req.path).map_err(data_error)?),
        IngestKind::Trees => serde_json::to_value(
            store.ingest_trees(&req.path, req.min_size.unwrap_or(DEFAULT_MIN_TREE_SIZE)).map_err(data_error)?,
        ),
    }
    .expect("reports serialise");
    if let Some(rebuild) = &state.rebuild {
        let engine = rebuild(&store).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e))?;
        state.service.set_engine(engine);
    }
    Ok(Json(report))
}
