//! HTTP API over cleaning sessions.
//!
//! A session is an uploaded table plus its latest cleaning config and
//! result. Sessions live in memory and on disk under the data directory
//! (`<id>/raw.csv`, `<id>/session.json`, `<id>/result.json`), and are
//! reloaded on start.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::{to_bytes, Body, Bytes};
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::{Any, CorsLayer};
use tscrub_core::impute::MethodRegistry;
use tscrub_core::pipeline::parse_date_format;
use tscrub_core::series::revert;
use tscrub_core::stats::{summary_stats, Summary};
use tscrub_core::table::coerce_values;
use tscrub_core::windows::{split_windows, IntervalSpec};
use tscrub_core::{clean, CleanConfig, CleanResult, MethodId, RawTable};

use crate::io::{cleaned_csv_string, read_csv, read_csv_from, write_table};
use tscrub_core::report::generate_report;

/// Largest accepted upload in bytes.
pub const UPLOAD_LIMIT: usize = 100 * 1024 * 1024;
pub const PREVIEW_ROWS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Uploaded,
    Cleaning,
    Done,
    Failed,
}

/// Body of `POST /sessions/{id}/clean`. Only the four built-in methods can
/// be named here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CleanRequest {
    pub date_format: String,
    #[serde(default)]
    pub time: Option<String>,
    #[serde(default)]
    pub value: Option<String>,
    #[serde(default)]
    pub methods: Option<Vec<String>>,
    #[serde(default = "default_true")]
    pub replace_outliers: bool,
    #[serde(default = "default_true")]
    pub detect_outliers: bool,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub period: Option<usize>,
    #[serde(default)]
    pub sim_fraction: Option<f64>,
    #[serde(default)]
    pub reps: Option<usize>,
}

fn default_true() -> bool {
    true
}

impl CleanRequest {
    pub fn to_config(&self) -> CleanConfig {
        let mut cfg = CleanConfig::new(self.date_format.clone());
        cfg.time = self.time.clone();
        cfg.value = self.value.clone();
        if let Some(m) = &self.methods {
            cfg.benchmark.methods = m.iter().map(|s| MethodId::new(s.as_str())).collect();
        }
        if let Some(seed) = self.seed {
            cfg.benchmark.seed = seed;
        }
        if let Some(f) = self.sim_fraction {
            cfg.benchmark.sim_fraction = f;
        }
        if let Some(r) = self.reps {
            cfg.benchmark.repetitions = r;
        }
        if let Some(a) = self.alpha {
            cfg.anomaly.alpha = a;
        }
        cfg.anomaly.period = self.period;
        cfg.anomaly.replace = self.replace_outliers;
        cfg.anomaly.detect = self.detect_outliers;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub code: String,
    pub message: String,
    pub stage: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status: status.as_u16(),
            code: code.into(),
            message: message.into(),
            stage: None,
        }
    }

    fn at(mut self, stage: &str) -> Self {
        self.stage = Some(stage.into());
        self
    }

    fn not_found(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no session '{id}'"))
    }

    fn too_large() -> Self {
        ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "payload_too_large",
            format!("uploads are limited to {UPLOAD_LIMIT} bytes"),
        )
        .at("upload")
    }

    fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Meta {
    status: Status,
    config: Option<CleanRequest>,
    error: Option<ApiError>,
}

#[derive(Debug)]
struct Inner {
    meta: Meta,
    result: Option<Arc<CleanResult>>,
}

#[derive(Debug)]
struct Session {
    id: String,
    dir: PathBuf,
    raw: Arc<RawTable>,
    inner: Mutex<Inner>,
}

impl Session {
    fn lock(&self) -> std::sync::MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn persist_meta(&self, meta: &Meta) -> std::io::Result<()> {
        let json = serde_json::to_vec_pretty(meta).expect("meta serializes");
        write_atomic(&self.dir.join("session.json"), &json)
    }

    fn persist_result(&self, result: Option<&CleanResult>) -> std::io::Result<()> {
        let path = self.dir.join("result.json");
        match result {
            Some(r) => write_atomic(&path, &serde_json::to_vec(r).expect("result serializes")),
            None => match std::fs::remove_file(&path) {
                Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(e),
                _ => Ok(()),
            },
        }
    }

    fn result_when_done(&self) -> Result<Arc<CleanResult>, ApiError> {
        let inner = self.lock();
        match (&inner.meta.status, &inner.result) {
            (Status::Done, Some(r)) => Ok(r.clone()),
            (status, _) => {
                let mut e = ApiError::new(
                    StatusCode::CONFLICT,
                    "not_ready",
                    format!("session is {}, no result yet", json!(status).as_str().unwrap_or("")),
                );
                if let Some(err) = &inner.meta.error {
                    e.message = format!("cleaning failed: {}", err.message);
                    e.stage = err.stage.clone();
                }
                Err(e)
            }
        }
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(tmp, path)
}

#[derive(Debug)]
pub struct AppState {
    data_dir: PathBuf,
    sessions: RwLock<HashMap<String, Arc<Session>>>,
}

impl AppState {
    /// Opens `data_dir`, reloading any sessions stored there. Sessions that
    /// were cleaning when the server stopped are marked failed.
    pub fn open(data_dir: &Path) -> std::io::Result<Arc<Self>> {
        std::fs::create_dir_all(data_dir)?;
        let mut sessions = HashMap::new();
        for entry in std::fs::read_dir(data_dir)? {
            let dir = entry?.path();
            if !dir.is_dir() {
                continue;
            }
            match load_session(&dir) {
                Ok(s) => {
                    sessions.insert(s.id.clone(), Arc::new(s));
                }
                Err(e) => log::warn!("skipping {}: {e}", dir.display()),
            }
        }
        log::info!("{} session(s) loaded from {}", sessions.len(), data_dir.display());
        Ok(Arc::new(AppState {
            data_dir: data_dir.to_path_buf(),
            sessions: RwLock::new(sessions),
        }))
    }

    fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }
}

fn load_session(dir: &Path) -> anyhow::Result<Session> {
    let id = dir
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| anyhow::anyhow!("bad directory name"))?
        .to_string();
    let raw = read_csv(&dir.join("raw.csv"))?;
    let mut meta: Meta = serde_json::from_slice(&std::fs::read(dir.join("session.json"))?)?;
    let mut result = None;
    match meta.status {
        Status::Done => match std::fs::read(dir.join("result.json")) {
            Ok(bytes) => result = Some(Arc::new(serde_json::from_slice(&bytes)?)),
            Err(e) => {
                meta.status = Status::Failed;
                meta.error = Some(ApiError::internal(format!("stored result unreadable: {e}")));
            }
        },
        Status::Cleaning => {
            meta.status = Status::Failed;
            meta.error = Some(ApiError::internal("cleaning was interrupted by a restart"));
        }
        Status::Uploaded | Status::Failed => {}
    }
    Ok(Session {
        id,
        dir: dir.to_path_buf(),
        raw: Arc::new(raw),
        inner: Mutex::new(Inner { meta, result }),
    })
}

/// Builds the router over `state` with the default upload limit.
pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/clean", post(start_clean))
        .route("/sessions/{id}/report", get(get_report))
        .route("/sessions/{id}/windows", get(get_windows))
        .route("/sessions/{id}/revert", post(post_revert))
        .route("/sessions/{id}/export", get(get_export))
        .layer(DefaultBodyLimit::max(UPLOAD_LIMIT))
        .layer(
            CorsLayer::new()
                .allow_origin(Any)
                .allow_methods(Any)
                .allow_headers(Any),
        )
        .with_state(state)
}

/// Serves until the process is interrupted.
pub async fn serve(port: u16, data_dir: &Path) -> anyhow::Result<()> {
    let state = AppState::open(data_dir)?;
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

async fn upload_bytes(state: &Arc<AppState>, req: Request) -> Result<Bytes, ApiError> {
    let is_multipart = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    if !is_multipart {
        return to_bytes(req.into_body(), UPLOAD_LIMIT)
            .await
            .map_err(|_| ApiError::too_large());
    }
    let mut multipart = Multipart::from_request(req, state)
        .await
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_upload", e.body_text()).at("upload"))?;
    let mut first = None;
    loop {
        let field = multipart.next_field().await.map_err(multipart_error)?;
        let Some(field) = field else { break };
        let named_file = field.name() == Some("file");
        let has_filename = field.file_name().is_some();
        let bytes = field.bytes().await.map_err(multipart_error)?;
        if named_file {
            return Ok(bytes);
        }
        if has_filename && first.is_none() {
            first = Some(bytes);
        }
    }
    first.ok_or_else(|| {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_upload", "no file field in the form").at("upload")
    })
}

fn multipart_error(e: axum::extract::multipart::MultipartError) -> ApiError {
    if e.status() == StatusCode::PAYLOAD_TOO_LARGE {
        ApiError::too_large()
    } else {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_upload", e.body_text()).at("upload")
    }
}

fn preview(raw: &RawTable) -> Vec<Vec<String>> {
    (0..raw.row_count().min(PREVIEW_ROWS))
        .map(|r| raw.columns().iter().map(|c| c[r].clone()).collect())
        .collect()
}

async fn create_session(State(state): State<Arc<AppState>>, req: Request) -> Result<Response, ApiError> {
    let bytes = upload_bytes(&state, req).await?;
    let st = state.clone();
    let session = tokio::task::spawn_blocking(move || -> Result<Arc<Session>, ApiError> {
        let raw = read_csv_from(bytes.as_ref())
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_csv", e.to_string()).at("ingest"))?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let dir = st.data_dir.join(&id);
        let session = Session {
            id: id.clone(),
            dir: dir.clone(),
            raw: Arc::new(raw),
            inner: Mutex::new(Inner {
                meta: Meta {
                    status: Status::Uploaded,
                    config: None,
                    error: None,
                },
                result: None,
            }),
        };
        let store = || -> std::io::Result<()> {
            std::fs::create_dir_all(&dir)?;
            let file = std::fs::File::create(dir.join("raw.csv"))?;
            write_table(&session.raw, std::io::BufWriter::new(file)).map_err(std::io::Error::other)?;
            session.persist_meta(&session.lock().meta)
        };
        store().map_err(|e| ApiError::internal(format!("cannot store session: {e}")))?;
        Ok(Arc::new(session))
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    state
        .sessions
        .write()
        .unwrap_or_else(|p| p.into_inner())
        .insert(session.id.clone(), session.clone());
    let body = json!({
        "id": session.id,
        "columns": session.raw.column_names(),
        "row_count": session.raw.row_count(),
        "preview": preview(&session.raw),
    });
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

#[derive(Debug, Serialize)]
struct ColumnStats {
    name: String,
    numeric: usize,
    missing: usize,
    unparseable: usize,
    summary: Option<Summary>,
}

fn column_stats(raw: &RawTable) -> Vec<ColumnStats> {
    raw.column_names()
        .iter()
        .zip(raw.columns())
        .map(|(name, col)| {
            let c = coerce_values(col);
            ColumnStats {
                name: name.clone(),
                numeric: c.values.iter().filter(|v| v.is_some()).count(),
                missing: c.values.iter().filter(|v| v.is_none()).count() - c.failed_indices.len(),
                unparseable: c.failed_indices.len(),
                summary: summary_stats(&c.values),
            }
        })
        .collect()
}

async fn get_session(
    State(state): State<Arc<AppState>>,
    axum::extract::Path(id): axum::extract::Path<String>,
) -> Result<Response, ApiError> {
    let s = state.session(&id)?;
    let meta = s.lock().meta.clone();
    let raw = s.raw.clone();
    let stats = tokio::task::spawn_blocking(move || column_stats(&raw))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(json!({
        "id": s.id,
        "status": meta.status,
        "columns": s.raw.column_names(),
        "row_count": s.raw.row_count(),
        "input_stats": stats,
        "config": meta.config,
        "error": meta.error,
    }))
    .into_response())
}

fn bad_request(code: &str, message: impl Into<String>, stage: &str) -> ApiError {
    ApiError::new(StatusCode::BAD_REQUEST, code, message).at(stage)
}

fn parse_json<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| bad_request("bad_request", e.to_string(), "request"))
}

fn validate(req: &CleanRequest, cfg: &CleanConfig) -> Result<(), ApiError> {
    let orders = parse_date_format(&req.date_format)
        .map_err(|e| bad_request("bad_date_format", e.to_string(), "format"))?;
    if orders.is_empty() {
        return Err(bad_request("bad_date_format", "date_format is empty", "format"));
    }
    let builtins = MethodRegistry::with_defaults();
    for m in &cfg.benchmark.methods {
        if builtins.get(m.as_str()).is_none() {
            return Err(bad_request(
                "unknown_method",
                format!("unknown imputation method '{m}'; only built-in methods are available"),
                "impute",
            ));
        }
    }
    cfg.benchmark
        .validate()
        .map_err(|e| bad_request("bad_config", e.to_string(), "impute"))?;
    cfg.anomaly
        .validate()
        .map_err(|e| bad_request("bad_config", e.to_string(), "outliers"))?;
    Ok(())
}

async fn start_clean(
    State(state): State<Arc<AppState>>,
    axum::extract::Path(id): axum::extract::Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let s = state.session(&id)?;
    let req: CleanRequest = parse_json(&body)?;
    let cfg = req.to_config();
    validate(&req, &cfg)?;
    {
        let mut inner = s.lock();
        if inner.meta.status == Status::Cleaning {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                "already_cleaning",
                "a cleaning job is already running for this session",
            ));
        }
        inner.meta = Meta {
            status: Status::Cleaning,
            config: Some(req),
            error: None,
        };
        inner.result = None;
        s.persist_result(None)
            .and_then(|_| s.persist_meta(&inner.meta))
            .map_err(|e| ApiError::internal(format!("cannot store session: {e}")))?;
    }
    let job = s.clone();
    tokio::task::spawn_blocking(move || run_clean(&job, &cfg));
    Ok((StatusCode::ACCEPTED, Json(json!({"id": id, "status": Status::Cleaning}))).into_response())
}

fn run_clean(s: &Session, cfg: &CleanConfig) {
    let outcome = clean(&s.raw, cfg, &MethodRegistry::with_defaults());
    let mut inner = s.lock();
    match outcome {
        Ok(result) => {
            if let Err(e) = s.persist_result(Some(&result)) {
                log::error!("session {}: cannot store result: {e}", s.id);
            }
            inner.meta.status = Status::Done;
            inner.result = Some(Arc::new(result));
        }
        Err(e) => {
            log::info!("session {}: cleaning failed: {e}", s.id);
            inner.meta.status = Status::Failed;
            inner.meta.error = Some(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "clean_failed", e.to_string()).at(e.stage()));
        }
    }
    if let Err(e) = s.persist_meta(&inner.meta) {
        log::error!("session {}: cannot store status: {e}", s.id);
    }
}

async fn get_report(
    State(state): State<Arc<AppState>>,
    axum::extract::Path(id): axum::extract::Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let result = state.session(&id)?.result_when_done()?;
    match q.get("format").map(String::as_str).unwrap_or("text") {
        "text" => Ok((
            [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
            generate_report(&result),
        )
            .into_response()),
        "json" => Ok(Json(result.as_ref()).into_response()),
        other => Err(bad_request("bad_format", format!("unknown report format '{other}'"), "report")),
    }
}

async fn get_windows(
    State(state): State<Arc<AppState>>,
    axum::extract::Path(id): axum::extract::Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let result = state.session(&id)?.result_when_done()?;
    let interval = q
        .get("interval")
        .ok_or_else(|| bad_request("bad_interval", "missing 'interval' parameter", "windows"))?;
    let spec: IntervalSpec = interval
        .parse()
        .map_err(|e: tscrub_core::windows::WindowError| bad_request("bad_interval", e.to_string(), "windows"))?;
    let body = tokio::task::spawn_blocking(move || -> Result<serde_json::Value, ApiError> {
        let ws = split_windows(&result, spec)
            .map_err(|e| bad_request("bad_interval", e.to_string(), "windows"))?;
        let windows: Vec<serde_json::Value> = ws
            .windows
            .iter()
            .map(|w| {
                json!({
                    "index": w.index,
                    "start": w.start,
                    "end": w.end,
                    "len": w.len,
                    "summary": w.summary,
                    "points": w.points(&result),
                })
            })
            .collect();
        Ok(json!({"interval": ws.spec.to_string(), "count": windows.len(), "windows": windows}))
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(body).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RevertRequest {
    change_ids: Vec<u64>,
}

async fn post_revert(
    State(state): State<Arc<AppState>>,
    axum::extract::Path(id): axum::extract::Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let s = state.session(&id)?;
    let req: RevertRequest = parse_json(&body)?;
    let ids: BTreeSet<u64> = req.change_ids.into_iter().collect();
    let updated = {
        let mut inner = s.lock();
        let current = match (&inner.meta.status, &inner.result) {
            (Status::Done, Some(r)) => r.clone(),
            _ => {
                drop(inner);
                return Err(s.result_when_done().err().unwrap_or_else(|| ApiError::internal("inconsistent session")));
            }
        };
        let updated = Arc::new(revert(&current, &ids).map_err(|e| bad_request("bad_revert", e.to_string(), "revert"))?);
        s.persist_result(Some(&updated))
            .map_err(|e| ApiError::internal(format!("cannot store result: {e}")))?;
        inner.result = Some(updated.clone());
        updated
    };
    Ok(Json(updated.as_ref()).into_response())
}

async fn get_export(
    State(state): State<Arc<AppState>>,
    axum::extract::Path(id): axum::extract::Path<String>,
) -> Result<Response, ApiError> {
    let result = state.session(&id)?.result_when_done()?;
    let csv = cleaned_csv_string(&result);
    Ok((
        [
            (header::CONTENT_TYPE, "text/csv; charset=utf-8".to_string()),
            (
                header::CONTENT_DISPOSITION,
                format!("attachment; filename=\"{id}-cleaned.csv\""),
            ),
        ],
        Body::from(csv),
    )
        .into_response())
}
