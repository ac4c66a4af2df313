//! HTTP/JSON service: model handles, weaving, simulation sessions,
//! objective and test generation.
//!
//! Errors are returned as `{"code", "message", "location"?}` with one of the
//! codes in [`codes`].

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fs;
use std::io;
use std::net::SocketAddr;
use std::path::{Path as FsPath, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, PoisonError, RwLock, TryLockError};

use axum::extract::{FromRequest, Path, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;

use secweave_core::efsm::{Efsm, ModelStats};
use secweave_core::policy::parse_policy;
use secweave_core::simulator::{Session, SessionView, SimError};
use secweave_core::testgen::{
    generate_objectives, hit_or_jump, GenError, GenParams, GenReport, ObjectiveError, TestCase,
    TestPurpose,
};
use secweave_core::text::{
    emit_testcase, parse_model_named, parse_purposes, parse_weave_config, serialize_model,
    write_expr, write_purposes, ParseError, SourceSpan,
};
use secweave_core::weaver::{weave, WeaveConfig, WeaveReport};

/// Default listening port when `SECWEAVE_PORT` is unset.
pub const DEFAULT_PORT: u16 = 8080;
pub const PORT_ENV: &str = "SECWEAVE_PORT";

pub mod codes {
    pub const BAD_REQUEST: &str = "bad_request";
    pub const NOT_FOUND: &str = "not_found";
    pub const SYNTAX_ERROR: &str = "syntax_error";
    pub const RESOLUTION_ERROR: &str = "resolution_error";
    pub const POLICY_ERROR: &str = "policy_error";
    pub const WEAVE_ERROR: &str = "weave_error";
    pub const INVALID_CHOICE: &str = "invalid_choice";
    pub const NOTHING_TO_UNDO: &str = "nothing_to_undo";
    pub const SESSION_BUSY: &str = "session_busy";
    pub const OBJECTIVE_ERROR: &str = "objective_error";
    pub const NONDETERMINISTIC: &str = "nondeterministic";
    pub const INVALID_PARAMS: &str = "invalid_params";
    pub const GENERATION_EXHAUSTED: &str = "generation_exhausted";
    pub const DEADLOCKED: &str = "deadlocked";
    pub const INTERNAL: &str = "internal";

    pub const ALL: [&str; 15] = [
        BAD_REQUEST,
        NOT_FOUND,
        SYNTAX_ERROR,
        RESOLUTION_ERROR,
        POLICY_ERROR,
        WEAVE_ERROR,
        INVALID_CHOICE,
        NOTHING_TO_UNDO,
        SESSION_BUSY,
        OBJECTIVE_ERROR,
        NONDETERMINISTIC,
        INVALID_PARAMS,
        GENERATION_EXHAUSTED,
        DEADLOCKED,
        INTERNAL,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<SourceSpan>,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                code: code.to_string(),
                message: message.into(),
                location: None,
            },
        }
    }

    fn unprocessable(code: &str, message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }

    fn not_found(what: &str, id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, codes::NOT_FOUND, format!("no {what} `{id}`"))
    }

    fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, codes::INTERNAL, message)
    }
}

impl From<ParseError> for ApiError {
    fn from(e: ParseError) -> Self {
        let code = match e {
            ParseError::Syntax { .. } => codes::SYNTAX_ERROR,
            ParseError::Resolution { .. } => codes::RESOLUTION_ERROR,
        };
        let mut err = ApiError::unprocessable(code, e.to_string());
        err.body.location = Some(e.span().clone());
        err
    }
}

impl From<io::Error> for ApiError {
    fn from(e: io::Error) -> Self {
        ApiError::internal(format!("store: {e}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

/// JSON body whose rejections are reported as [`ApiError`].
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(e) => Err(ApiError::new(StatusCode::BAD_REQUEST, codes::BAD_REQUEST, e.body_text())),
        }
    }
}

pub struct ModelEntry {
    pub id: String,
    pub name: String,
    pub source: String,
    pub model: Arc<Efsm>,
    /// Handle of the model this one was woven from.
    pub parent: Option<String>,
    pub report: Option<WeaveReport>,
}

impl ModelEntry {
    fn summary(&self) -> ModelSummary {
        ModelSummary {
            id: self.id.clone(),
            name: self.name.clone(),
            stats: self.model.stats(),
            parent: self.parent.clone(),
        }
    }
}

pub struct SessionSlot {
    pub id: String,
    pub model: String,
    pub session: RwLock<Session>,
}

/// In-memory stores, optionally written through to a directory.
#[derive(Default)]
pub struct AppState {
    models: RwLock<HashMap<String, Arc<ModelEntry>>>,
    sessions: RwLock<HashMap<String, Arc<SessionSlot>>>,
    next: AtomicU64,
    store: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    name: String,
    parent: Option<String>,
}

impl AppState {
    pub fn new() -> Self {
        AppState::default()
    }

    /// Opens (or creates) a store directory and reloads the models saved there.
    pub fn with_store(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let state = AppState {
            store: Some(dir.clone()),
            ..AppState::default()
        };
        let mut max = 0;
        let mut models = state.models.write().unwrap_or_else(PoisonError::into_inner);
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().is_none_or(|e| e != "mdl") {
                continue;
            }
            let Some(id) = path.file_stem().and_then(|s| s.to_str()).map(str::to_string) else {
                continue;
            };
            let source = fs::read_to_string(&path)?;
            let Ok(model) = parse_model_named(&source, &path.display().to_string()) else {
                continue;
            };
            let meta: Option<Meta> = fs::read_to_string(dir.join(format!("{id}.meta.json")))
                .ok()
                .and_then(|s| serde_json::from_str(&s).ok());
            let report = fs::read_to_string(dir.join(format!("{id}.report.json")))
                .ok()
                .and_then(|s| serde_json::from_str(&s).ok());
            if let Some(n) = id.strip_prefix('m').and_then(|n| n.parse::<u64>().ok()) {
                max = max.max(n);
            }
            let (name, parent) = match meta {
                Some(m) => (m.name, m.parent),
                None => (model.name.clone(), None),
            };
            models.insert(
                id.clone(),
                Arc::new(ModelEntry {
                    id,
                    name,
                    source,
                    model: Arc::new(model),
                    parent,
                    report,
                }),
            );
        }
        drop(models);
        state.next.store(max, Ordering::SeqCst);
        Ok(state)
    }

    fn fresh(&self, prefix: char) -> String {
        format!("{prefix}{}", self.next.fetch_add(1, Ordering::SeqCst) + 1)
    }

    pub fn model(&self, id: &str) -> Result<Arc<ModelEntry>, ApiError> {
        self.models
            .read()
            .unwrap_or_else(PoisonError::into_inner)
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("model", id))
    }

    pub fn session(&self, id: &str) -> Result<Arc<SessionSlot>, ApiError> {
        self.sessions
            .read()
            .unwrap_or_else(PoisonError::into_inner)
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("session", id))
    }

    fn persist(&self, e: &ModelEntry) -> io::Result<()> {
        let Some(dir) = &self.store else {
            return Ok(());
        };
        fs::write(dir.join(format!("{}.mdl", e.id)), &e.source)?;
        let meta = Meta {
            name: e.name.clone(),
            parent: e.parent.clone(),
        };
        fs::write(dir.join(format!("{}.meta.json", e.id)), serde_json::to_string_pretty(&meta)?)?;
        if let Some(r) = &e.report {
            fs::write(dir.join(format!("{}.report.json", e.id)), serde_json::to_string_pretty(r)?)?;
            fs::write(dir.join(format!("{}.report.txt", e.id)), r.render())?;
        }
        Ok(())
    }

    fn insert_model(&self, entry: ModelEntry) -> Result<Arc<ModelEntry>, ApiError> {
        self.persist(&entry)?;
        let entry = Arc::new(entry);
        self.models
            .write()
            .unwrap_or_else(PoisonError::into_inner)
            .insert(entry.id.clone(), entry.clone());
        Ok(entry)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub id: String,
    pub name: String,
    pub stats: ModelStats,
    pub parent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: String,
    pub initial: bool,
    /// Breadth-first distance from the initial state; unreachable states
    /// go one layer below the deepest reachable one.
    pub layer: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub id: String,
    pub source: String,
    pub target: String,
    pub input: String,
    pub output: String,
    pub label: String,
    pub predicate: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

pub fn graph(m: &Efsm) -> Graph {
    let mut layer: BTreeMap<&str, usize> = BTreeMap::from([(m.initial_state.as_str(), 0)]);
    let mut queue = VecDeque::from([m.initial_state.as_str()]);
    while let Some(s) = queue.pop_front() {
        let d = layer[s];
        for t in m.transitions.iter().filter(|t| t.source == s) {
            if !layer.contains_key(t.target.as_str()) {
                layer.insert(&t.target, d + 1);
                queue.push_back(&t.target);
            }
        }
    }
    let unreachable = layer.values().max().map_or(0, |d| d + 1);
    Graph {
        nodes: m
            .states
            .iter()
            .map(|s| GraphNode {
                id: s.clone(),
                initial: *s == m.initial_state,
                layer: layer.get(s.as_str()).copied().unwrap_or(unreachable),
            })
            .collect(),
        edges: m
            .transitions
            .iter()
            .map(|t| GraphEdge {
                id: t.id.clone(),
                source: t.source.clone(),
                target: t.target.clone(),
                input: t.input.signal.clone(),
                output: t.output.signal.clone(),
                label: format!("{}: {}/{}", t.id, t.input.signal, t.output.signal),
                predicate: t.predicate.as_ref().map(write_expr),
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDetail {
    #[serde(flatten)]
    pub summary: ModelSummary,
    pub source: String,
    pub model: Efsm,
    pub graph: Graph,
    pub report: Option<WeaveReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeaveResponse {
    pub model: ModelSummary,
    pub report: WeaveReport,
    pub report_text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionResponse {
    pub id: String,
    pub model: String,
    #[serde(flatten)]
    pub view: SessionView,
    /// The listing as the command-line simulator prints it.
    pub render: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestCaseResponse {
    pub text: String,
    pub testcase: TestCase,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectivesResponse {
    pub purposes: Vec<TestPurpose>,
    pub text: String,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestgenResponse {
    pub text: String,
    pub testcase: TestCase,
    pub report: GenReport,
}

#[derive(Debug, Clone, Deserialize)]
pub struct CreateModel {
    pub source: String,
    #[serde(default)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct WeaveRequest {
    pub policy: String,
    /// `.weave` text; absent means no observation transitions.
    #[serde(default)]
    pub config: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct StepRequest {
    pub index: usize,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ObjectivesRequest {
    pub state: String,
    pub input: String,
    pub param: String,
}

/// Purposes as `.purposes` text or as structured objects.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PurposesInput {
    Text(String),
    List(Vec<TestPurpose>),
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct ParamsInput {
    pub depth_limit: Option<usize>,
    pub max_jumps: Option<usize>,
    pub rng_seed: Option<u64>,
    pub max_total_steps: Option<usize>,
}

impl ParamsInput {
    pub fn resolve(&self) -> GenParams {
        let d = GenParams::default();
        GenParams {
            depth_limit: self.depth_limit.unwrap_or(d.depth_limit),
            max_jumps: self.max_jumps.unwrap_or(d.max_jumps),
            rng_seed: self.rng_seed.unwrap_or(d.rng_seed),
            max_total_steps: self.max_total_steps.unwrap_or(d.max_total_steps),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct TestgenRequest {
    pub purposes: PurposesInput,
    #[serde(default)]
    pub params: ParamsInput,
}

type Shared = State<Arc<AppState>>;

async fn list_models(State(st): Shared) -> Json<Vec<ModelSummary>> {
    let models = st.models.read().unwrap_or_else(PoisonError::into_inner);
    let mut out: Vec<ModelSummary> = models.values().map(|e| e.summary()).collect();
    out.sort_by_key(|s| (s.id.len(), s.id.clone()));
    Json(out)
}

async fn create_model(State(st): Shared, Body(req): Body<CreateModel>) -> Result<(StatusCode, Json<ModelSummary>), ApiError> {
    let model = parse_model_named(&req.source, "<upload>")?;
    let id = st.fresh('m');
    let entry = st.insert_model(ModelEntry {
        name: req.name.unwrap_or_else(|| model.name.clone()),
        id,
        source: req.source,
        model: Arc::new(model),
        parent: None,
        report: None,
    })?;
    Ok((StatusCode::CREATED, Json(entry.summary())))
}

async fn get_model(State(st): Shared, Path(id): Path<String>) -> Result<Json<ModelDetail>, ApiError> {
    let e = st.model(&id)?;
    Ok(Json(ModelDetail {
        summary: e.summary(),
        source: e.source.clone(),
        model: (*e.model).clone(),
        graph: graph(&e.model),
        report: e.report.clone(),
    }))
}

async fn weave_model(
    State(st): Shared,
    Path(id): Path<String>,
    Body(req): Body<WeaveRequest>,
) -> Result<(StatusCode, Json<WeaveResponse>), ApiError> {
    let base = st.model(&id)?;
    let policy = parse_policy(&req.policy).map_err(|e| ApiError::unprocessable(codes::POLICY_ERROR, e.to_string()))?;
    let cfg = match &req.config {
        Some(text) => parse_weave_config(text, &base.model)?,
        None => WeaveConfig::default(),
    };
    let (woven, report) =
        weave(&base.model, &policy, &cfg).map_err(|e| ApiError::unprocessable(codes::WEAVE_ERROR, e.to_string()))?;
    let entry = st.insert_model(ModelEntry {
        id: st.fresh('m'),
        name: format!("{}+{}", base.name, report.policy),
        source: serialize_model(&woven),
        model: Arc::new(woven),
        parent: Some(base.id.clone()),
        report: Some(report.clone()),
    })?;
    Ok((
        StatusCode::CREATED,
        Json(WeaveResponse {
            model: entry.summary(),
            report_text: report.render(),
            report,
        }),
    ))
}

fn session_response(slot: &SessionSlot, s: &Session) -> SessionResponse {
    SessionResponse {
        id: slot.id.clone(),
        model: slot.model.clone(),
        view: s.view(),
        render: s.render(),
    }
}

async fn create_session(State(st): Shared, Path(id): Path<String>) -> Result<(StatusCode, Json<SessionResponse>), ApiError> {
    let e = st.model(&id)?;
    let slot = Arc::new(SessionSlot {
        id: st.fresh('s'),
        model: e.id.clone(),
        session: RwLock::new(Session::new(e.model.clone())),
    });
    st.sessions
        .write()
        .unwrap_or_else(PoisonError::into_inner)
        .insert(slot.id.clone(), slot.clone());
    let s = slot.session.read().unwrap_or_else(PoisonError::into_inner);
    Ok((StatusCode::CREATED, Json(session_response(&slot, &s))))
}

async fn get_session(State(st): Shared, Path(id): Path<String>) -> Result<Json<SessionResponse>, ApiError> {
    let slot = st.session(&id)?;
    let s = slot.session.read().unwrap_or_else(PoisonError::into_inner);
    Ok(Json(session_response(&slot, &s)))
}

/// Applies `f` under the session's write lock; a held lock is a conflict.
fn mutate(
    st: &AppState,
    id: &str,
    f: impl FnOnce(&mut Session) -> Result<(), SimError>,
) -> Result<Json<SessionResponse>, ApiError> {
    let slot = st.session(id)?;
    let mut s = match slot.session.try_write() {
        Ok(g) => g,
        Err(TryLockError::Poisoned(p)) => p.into_inner(),
        Err(TryLockError::WouldBlock) => {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                codes::SESSION_BUSY,
                format!("session `{id}` is being changed by another request"),
            ))
        }
    };
    f(&mut s).map_err(|e| {
        let code = match e {
            SimError::InvalidChoice { .. } => codes::INVALID_CHOICE,
            SimError::NothingToUndo => codes::NOTHING_TO_UNDO,
        };
        ApiError::unprocessable(code, e.to_string())
    })?;
    Ok(Json(session_response(&slot, &s)))
}

async fn step_session(
    State(st): Shared,
    Path(id): Path<String>,
    Body(req): Body<StepRequest>,
) -> Result<Json<SessionResponse>, ApiError> {
    mutate(&st, &id, |s| s.step(req.index).map(|_| ()))
}

async fn undo_session(State(st): Shared, Path(id): Path<String>) -> Result<Json<SessionResponse>, ApiError> {
    mutate(&st, &id, |s| s.undo().map(|_| ()))
}

async fn reset_session(State(st): Shared, Path(id): Path<String>) -> Result<Json<SessionResponse>, ApiError> {
    mutate(&st, &id, |s| {
        s.reset();
        Ok(())
    })
}

async fn session_testcase(State(st): Shared, Path(id): Path<String>) -> Result<Json<TestCaseResponse>, ApiError> {
    let slot = st.session(&id)?;
    let s = slot.session.read().unwrap_or_else(PoisonError::into_inner);
    let testcase = s.trace_to_testcase();
    Ok(Json(TestCaseResponse {
        text: emit_testcase(&testcase),
        testcase,
    }))
}

async fn objectives(
    State(st): Shared,
    Path(id): Path<String>,
    Body(req): Body<ObjectivesRequest>,
) -> Result<Json<ObjectivesResponse>, ApiError> {
    let e = st.model(&id)?;
    let o = generate_objectives(&e.model, &req.state, &req.input, &req.param).map_err(|err| {
        let code = match err {
            ObjectiveError::NondeterministicAt { .. } => codes::NONDETERMINISTIC,
            _ => codes::OBJECTIVE_ERROR,
        };
        ApiError::unprocessable(code, err.to_string())
    })?;
    Ok(Json(ObjectivesResponse {
        text: write_purposes(&o.purposes),
        purposes: o.purposes,
        warnings: o.warnings,
    }))
}

#[allow(clippy::result_large_err)]
async fn testgen(
    State(st): Shared,
    Path(id): Path<String>,
    Body(req): Body<TestgenRequest>,
) -> Result<Json<TestgenResponse>, ApiError> {
    let e = st.model(&id)?;
    let seq = match req.purposes {
        PurposesInput::Text(t) => parse_purposes(&t, &e.model)?,
        PurposesInput::List(l) => l,
    };
    let gp = req.params.resolve();
    let model = e.model.clone();
    let result = tokio::task::spawn_blocking(move || hit_or_jump(&model, &seq, &gp))
        .await
        .map_err(|j| ApiError::internal(j.to_string()))?;
    match result {
        Ok(g) => Ok(Json(TestgenResponse {
            text: emit_testcase(&g.testcase),
            testcase: g.testcase,
            report: g.report,
        })),
        Err(err) => {
            let code = match err {
                GenError::EmptySequence | GenError::InvalidParams(_) => codes::INVALID_PARAMS,
                GenError::Exhausted { .. } => codes::GENERATION_EXHAUSTED,
                GenError::DeadlockedCursor { .. } => codes::DEADLOCKED,
            };
            Err(ApiError::unprocessable(code, err.to_string()))
        }
    }
}

async fn fallback() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, codes::NOT_FOUND, "no such endpoint")
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/models", get(list_models).post(create_model))
        .route("/models/{id}", get(get_model))
        .route("/models/{id}/weave", post(weave_model))
        .route("/models/{id}/sessions", post(create_session))
        .route("/models/{id}/objectives", post(objectives))
        .route("/models/{id}/testgen", post(testgen))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/step", post(step_session))
        .route("/sessions/{id}/undo", post(undo_session))
        .route("/sessions/{id}/reset", post(reset_session))
        .route("/sessions/{id}/testcase", get(session_testcase))
        .fallback(fallback)
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Port from `SECWEAVE_PORT`, else [`DEFAULT_PORT`].
pub fn default_port() -> u16 {
    std::env::var(PORT_ENV)
        .ok()
        .and_then(|p| p.parse().ok())
        .unwrap_or(DEFAULT_PORT)
}

pub async fn serve(addr: SocketAddr, store: Option<&FsPath>) -> io::Result<()> {
    let state = match store {
        Some(dir) => AppState::with_store(dir)?,
        None => AppState::new(),
    };
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("secweave listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state))).await
}
