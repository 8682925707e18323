//! The HTTP/JSON interface. Each call performs at most one store step;
//! calls that may wait for the global lock run on the blocking pool.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use rand::Rng;
use serde::Deserialize;
use serde_json::{json, Value as JsonValue};

use weakstore_core::executor::{ExecError, SharedSession, SharedStore, StoreConfig};
use weakstore_core::sql::{run_script, Catalog, Outcome, SqlError};
use weakstore_core::{Key, SessionId, Value};

pub const TOKEN_HEADER: &str = "x-session-token";

#[derive(Debug, Clone)]
pub struct ServerSettings {
    /// How long a `begin` waits for another session's commit.
    pub begin_timeout: Duration,
    /// Sessions idle this long are closed, committing any live transaction.
    pub idle_timeout: Option<Duration>,
}

impl Default for ServerSettings {
    fn default() -> Self {
        ServerSettings {
            begin_timeout: Duration::from_secs(10),
            idle_timeout: Some(Duration::from_secs(60)),
        }
    }
}

struct ApiSession {
    session: SessionId,
    last_used: Instant,
    /// Requests still being served; a busy session is never idle.
    in_flight: usize,
}

/// Marks a session busy for the duration of one request.
struct Busy {
    app: Arc<AppState>,
    token: String,
    session: SessionId,
}

impl Drop for Busy {
    fn drop(&mut self) {
        if let Some(s) = self.app.sessions().get_mut(&self.token) {
            s.in_flight -= 1;
            s.last_used = Instant::now();
        }
    }
}

pub struct AppState {
    store: SharedStore,
    catalog: Mutex<Catalog>,
    sessions: Mutex<HashMap<String, ApiSession>>,
    settings: ServerSettings,
}

impl AppState {
    pub fn new(cfg: StoreConfig, settings: ServerSettings) -> Arc<Self> {
        Arc::new(AppState {
            store: SharedStore::new(cfg),
            catalog: Mutex::new(Catalog::new()),
            sessions: Mutex::new(HashMap::new()),
            settings,
        })
    }

    pub fn store(&self) -> &SharedStore {
        &self.store
    }

    fn sessions(&self) -> MutexGuard<'_, HashMap<String, ApiSession>> {
        self.sessions.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn enter(self: &Arc<Self>, headers: &HeaderMap) -> Result<Busy, ApiError> {
        let token = headers
            .get(TOKEN_HEADER)
            .and_then(|v| v.to_str().ok())
            .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "missing_token", "X-Session-Token header required"))?;
        let mut sessions = self.sessions();
        let s = sessions.get_mut(token).ok_or_else(unknown_session)?;
        s.in_flight += 1;
        Ok(Busy {
            app: Arc::clone(self),
            token: token.to_owned(),
            session: s.session,
        })
    }

    /// Closes sessions idle longer than the configured timeout. Returns
    /// how many were closed.
    pub fn expire_idle(&self) -> usize {
        let Some(idle) = self.settings.idle_timeout else {
            return 0;
        };
        let expired: Vec<SessionId> = {
            let mut sessions = self.sessions();
            let now = Instant::now();
            let stale: Vec<String> = sessions
                .iter()
                .filter(|(_, s)| s.in_flight == 0 && now.duration_since(s.last_used) >= idle)
                .map(|(t, _)| t.clone())
                .collect();
            stale.iter().filter_map(|t| sessions.remove(t)).map(|s| s.session).collect()
        };
        for s in &expired {
            if self.store.live_txn(*s).is_some() {
                let _ = self.store.commit(*s);
            }
        }
        expired.len()
    }
}

fn unknown_session() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "unknown_session", "no session for this token")
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    detail: Option<JsonValue>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            detail: None,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.code, "message": self.message });
        if let Some(d) = self.detail {
            body["detail"] = d;
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<ExecError> for ApiError {
    fn from(e: ExecError) -> Self {
        let (status, code) = match &e {
            ExecError::LiveTransactionExists(_) => (StatusCode::CONFLICT, "live_transaction"),
            ExecError::BeginTimeout => (StatusCode::CONFLICT, "begin_timeout"),
            ExecError::NoLiveTransaction(_) => (StatusCode::BAD_REQUEST, "no_live_transaction"),
            ExecError::InvalidKey => (StatusCode::BAD_REQUEST, "invalid_key"),
            ExecError::UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
            ExecError::History(_) => (StatusCode::BAD_REQUEST, "invalid_operation"),
            ExecError::InternalNoCandidate { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "no_candidate"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<SqlError> for ApiError {
    fn from(e: SqlError) -> Self {
        let code = match &e {
            SqlError::Exec(inner) => return inner.clone().into(),
            SqlError::Syntax(s) => {
                let mut err = ApiError::new(StatusCode::BAD_REQUEST, "sql_syntax", e.to_string());
                err.detail = Some(json!({
                    "position": s.position,
                    "expected": s.expected,
                    "found": s.found,
                    "unsupported": s.unsupported,
                }));
                return err;
            }
            SqlError::UnknownTable(_) => "unknown_table",
            SqlError::UnknownColumn { .. } => "unknown_column",
            SqlError::TableExists(_) => "table_exists",
            SqlError::DuplicateColumn(_) => "duplicate_column",
            SqlError::Arity { .. } => "arity",
            SqlError::DuplicateKey { .. } => "duplicate_key",
            SqlError::NullPrimaryKey(_) => "null_primary_key",
            SqlError::PrimaryKeyUpdate(_) => "primary_key_update",
            SqlError::TypeError(..) => "type_error",
        };
        ApiError::new(StatusCode::BAD_REQUEST, code, e.to_string())
    }
}

fn malformed(e: JsonRejection) -> ApiError {
    ApiError::new(StatusCode::BAD_REQUEST, "malformed_request", e.body_text())
}

type Shared = State<Arc<AppState>>;
type ApiResult = Result<Json<JsonValue>, ApiError>;

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

fn key(text: String) -> Result<Key, ApiError> {
    Key::new(text).map_err(|_| ExecError::InvalidKey.into())
}

fn to_json(v: &Value) -> JsonValue {
    serde_json::to_value(v).expect("values serialize")
}

async fn open_session(State(app): Shared) -> ApiResult {
    let session = app.store.open_session();
    let token = format!("{:032x}", rand::thread_rng().gen::<u128>());
    app.sessions().insert(
        token.clone(),
        ApiSession {
            session,
            last_used: Instant::now(),
            in_flight: 0,
        },
    );
    Ok(Json(json!({ "token": token, "session": session.0 })))
}

async fn close_session(State(app): Shared, Path(token): Path<String>) -> Result<StatusCode, ApiError> {
    let s = app.sessions().remove(&token).ok_or_else(unknown_session)?;
    if app.store.live_txn(s.session).is_some() {
        app.store.commit(s.session)?;
    }
    Ok(StatusCode::NO_CONTENT)
}

async fn begin(State(app): Shared, headers: HeaderMap) -> ApiResult {
    let busy = app.enter(&headers)?;
    let s = busy.session;
    let timeout = app.settings.begin_timeout;
    let t = blocking(move || Ok(app.store.begin(s, Some(timeout))?)).await?;
    Ok(Json(json!({ "txn": t.0 })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ReadBody {
    key: String,
}

async fn read(State(app): Shared, headers: HeaderMap, body: Result<Json<ReadBody>, JsonRejection>) -> ApiResult {
    let busy = app.enter(&headers)?;
    let s = busy.session;
    let Json(body) = body.map_err(malformed)?;
    let k = key(body.key)?;
    let v = blocking(move || Ok(app.store.read(s, &k)?)).await?;
    Ok(Json(json!({ "value": to_json(&v) })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WriteBody {
    key: String,
    value: Value,
}

async fn write(State(app): Shared, headers: HeaderMap, body: Result<Json<WriteBody>, JsonRejection>) -> ApiResult {
    let busy = app.enter(&headers)?;
    let s = busy.session;
    let Json(body) = body.map_err(malformed)?;
    let k = key(body.key)?;
    blocking(move || Ok(app.store.write(s, k, body.value)?)).await?;
    Ok(Json(json!({})))
}

async fn commit(State(app): Shared, headers: HeaderMap) -> ApiResult {
    let busy = app.enter(&headers)?;
    let s = busy.session;
    let t = blocking(move || Ok(app.store.commit(s)?)).await?;
    Ok(Json(json!({ "txn": t.0 })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SqlBody {
    query: String,
}

fn outcome(o: &Outcome) -> JsonValue {
    match o {
        Outcome::Rows(r) => json!({
            "columns": r.columns,
            "rows": r.rows.iter().map(|row| row.iter().map(to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        }),
        Outcome::Affected(n) => json!({ "affected": n }),
        Outcome::Created => json!({ "created": true }),
        Outcome::Begun => json!({ "begun": true }),
        Outcome::Committed => json!({ "committed": true }),
    }
}

/// Runs a `;`-separated script. The response lists every statement's
/// result; the last query's rows are also given at top level.
async fn sql(State(app): Shared, headers: HeaderMap, body: Result<Json<SqlBody>, JsonRejection>) -> ApiResult {
    let busy = app.enter(&headers)?;
    let s = busy.session;
    let Json(body) = body.map_err(malformed)?;
    let outcomes = blocking(move || {
        let mut session = SharedSession {
            store: &app.store,
            session: s,
            timeout: Some(app.settings.begin_timeout),
        };
        Ok(run_script(&mut session, &app.catalog, &body.query)?)
    })
    .await?;
    let results: Vec<JsonValue> = outcomes.iter().map(outcome).collect();
    let mut reply = json!({ "results": results });
    if let Some(last) = outcomes.iter().rev().find(|o| matches!(o, Outcome::Rows(_))) {
        let r = outcome(last);
        reply["columns"] = r["columns"].clone();
        reply["rows"] = r["rows"].clone();
    }
    Ok(Json(reply))
}

async fn history(State(app): Shared) -> Response {
    let text = app.store.history().to_json();
    ([(header::CONTENT_TYPE, "application/json")], text).into_response()
}

async fn config(State(app): Shared) -> ApiResult {
    let cfg = app.store.config();
    Ok(Json(json!({
        "isolation": cfg.level.name.to_lowercase().replace(" ", "-"),
        "seed": cfg.seed,
        "latest_reads": cfg.latest_per_session,
        "delay_ms": cfg.delay_max_ms,
        "default_value": to_json(&cfg.default_value),
        "begin_timeout_ms": app.settings.begin_timeout.as_millis() as u64,
        "idle_timeout_ms": app.settings.idle_timeout.map(|d| d.as_millis() as u64),
    })))
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/session", post(open_session))
        .route("/session/{token}", delete(close_session))
        .route("/kv/begin", post(begin))
        .route("/kv/read", post(read))
        .route("/kv/write", post(write))
        .route("/kv/commit", post(commit))
        .route("/sql", post(sql))
        .route("/history", get(history))
        .route("/config", get(config))
        .with_state(app)
}

/// Periodically closes idle sessions until the process exits.
pub fn spawn_reaper(app: Arc<AppState>) {
    let Some(idle) = app.settings.idle_timeout else {
        return;
    };
    let period = (idle / 4).max(Duration::from_millis(10));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            let app = Arc::clone(&app);
            let _ = tokio::task::spawn_blocking(move || app.expire_idle()).await;
        }
    });
}
