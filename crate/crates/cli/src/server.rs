//! Annotation REST API. Labels from the dataset never leave the server.

use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use factcheck_core::adversarial::{agreement_report, AgreementReport, AnnotationRecord, AnnotationStore, QcItem};
use factcheck_core::io::read_jsonl;
use factcheck_core::{Corpus, Label};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

pub struct ServerOptions {
    pub port: u16,
    pub store: PathBuf,
    pub tasks: PathBuf,
    pub dataset: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
}

pub struct AppState {
    tasks: Vec<QcItem>,
    task_ids: HashMap<String, usize>,
    labels: HashMap<String, Label>,
    store: Mutex<AnnotationStore>,
}

impl AppState {
    pub fn new(tasks: Vec<QcItem>, labels: HashMap<String, Label>, store: AnnotationStore) -> Result<Self> {
        let mut task_ids = HashMap::new();
        for (i, t) in tasks.iter().enumerate() {
            if task_ids.insert(t.pair_id.clone(), i).is_some() {
                bail!("duplicate task {}", t.pair_id);
            }
        }
        Ok(AppState {
            tasks,
            task_ids,
            labels,
            store: Mutex::new(store),
        })
    }

    fn progress(&self, store: &AnnotationStore, annotator: &str) -> Progress {
        let done = store
            .annotated_by(annotator)
            .into_iter()
            .filter(|id| self.task_ids.contains_key(*id))
            .count();
        Progress {
            done,
            total: self.tasks.len(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct AnnotatorQuery {
    annotator: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub done: usize,
    pub total: usize,
}

#[derive(Debug, Deserialize)]
struct Submission {
    pair_id: String,
    annotator: String,
    label: Label,
    #[serde(default)]
    grammar_flag: bool,
}

#[derive(Serialize)]
struct AgreementView {
    /// At least one rater pair or rater-vs-dataset comparison has a kappa.
    available: bool,
    #[serde(flatten)]
    report: AgreementReport,
}

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(serde_json::json!({ "error": msg.into() }))).into_response()
}

fn lock(state: &AppState) -> std::sync::MutexGuard<'_, AnnotationStore> {
    // a panic mid-write leaves the in-memory map consistent with the log
    state.store.lock().unwrap_or_else(|p| p.into_inner())
}

async fn next_task(State(state): State<Arc<AppState>>, Query(q): Query<AnnotatorQuery>) -> Response {
    if q.annotator.trim().is_empty() {
        return error(StatusCode::BAD_REQUEST, "annotator must not be empty");
    }
    let store = lock(&state);
    let done = store.annotated_by(&q.annotator);
    match state.tasks.iter().find(|t| !done.contains(t.pair_id.as_str())) {
        Some(t) => Json(t.clone()).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    }
}

async fn submit(State(state): State<Arc<AppState>>, Json(s): Json<Submission>) -> Response {
    if s.annotator.trim().is_empty() {
        return error(StatusCode::BAD_REQUEST, "annotator must not be empty");
    }
    if !state.task_ids.contains_key(&s.pair_id) {
        return error(StatusCode::NOT_FOUND, format!("unknown pair {}", s.pair_id));
    }
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    let record = AnnotationRecord {
        pair_id: s.pair_id,
        annotator_id: s.annotator.clone(),
        label: s.label,
        grammar_flag: s.grammar_flag,
        timestamp,
    };
    let mut store = lock(&state);
    if let Err(e) = store.submit(record) {
        log::error!("annotation not stored: {e}");
        return error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string());
    }
    (StatusCode::CREATED, Json(state.progress(&store, &s.annotator))).into_response()
}

async fn progress(State(state): State<Arc<AppState>>, Query(q): Query<AnnotatorQuery>) -> Response {
    let store = lock(&state);
    Json(state.progress(&store, &q.annotator)).into_response()
}

async fn agreement(State(state): State<Arc<AppState>>) -> Response {
    let store = lock(&state);
    let report = agreement_report(store.records(), &state.labels);
    let available = report.pairwise.iter().any(|p| p.report.is_some())
        || report.vs_dataset.iter().any(|d| d.report.is_some());
    Json(AgreementView { available, report }).into_response()
}

pub fn router(state: Arc<AppState>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/tasks/next", get(next_task))
        .route("/api/annotations", post(submit))
        .route("/api/progress", get(progress))
        .route("/api/agreement", get(agreement))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub fn load_state(opts: &ServerOptions) -> Result<AppState> {
    let tasks: Vec<QcItem> = read_jsonl(&opts.tasks)?;
    let labels = match &opts.dataset {
        Some(p) => Corpus::load(p)
            .with_context(|| format!("loading dataset {}", p.display()))?
            .iter()
            .map(|r| (r.id.clone(), r.label))
            .collect(),
        None => HashMap::new(),
    };
    let store = AnnotationStore::open(&opts.store)?;
    AppState::new(tasks, labels, store)
}

/// Blocks until interrupted. Prints the bound address on stdout first.
pub fn serve(opts: ServerOptions) -> Result<()> {
    if let Some(dir) = &opts.static_dir {
        if !dir.is_dir() {
            bail!("{} is not a directory", dir.display());
        }
    }
    let state = Arc::new(load_state(&opts)?);
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(("127.0.0.1", opts.port)).await?;
        let addr = listener.local_addr()?;
        println!("listening on http://{addr}");
        std::io::stdout().flush()?;
        axum::serve(listener, router(state, opts.static_dir))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}
