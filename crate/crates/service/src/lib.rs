//! HTTP session API over the BeamForge pipeline.
//!
//! Each session walks `New -> Parsed -> Confirmed -> Optimized`. Handlers work on
//! a copy of the session and store it back only on success, so a failed request
//! leaves the session untouched.

mod error;
mod source;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::{Path, Query, State};
use axum::http::header;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use beamforge_core::analysis::heatmap;
use beamforge_core::intent::{DialogueState, Feedback, IntentClass, LlmClient, DEFAULT_MAX_ROUNDS};
use beamforge_core::optimizer::alternate_optimize;
use beamforge_core::{OptResult, OptimizerConfig, ParsedIntent, Scenario};
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;

pub use error::ApiError;
pub use source::{Backend, ScenarioSource, SourceError};

pub const DEFAULT_TTL: Duration = Duration::from_secs(3600);
pub const DEFAULT_HEATMAP_RES: usize = 64;
pub const MAX_HEATMAP_RES: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionState {
    New,
    Parsed,
    Confirmed,
    Optimized,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub state: SessionState,
    pub dialogue: Option<DialogueState>,
    pub result: Option<(OptimizerConfig, OptResult)>,
}

struct Entry {
    session: Arc<tokio::sync::Mutex<Session>>,
    touched: Instant,
}

pub struct AppState {
    pub backend: Backend,
    pub llm: LlmClient,
    pub ttl: Duration,
    pub max_rounds: usize,
    sessions: Mutex<HashMap<String, Entry>>,
}

impl AppState {
    pub fn new(backend: Backend, llm: LlmClient) -> Self {
        AppState { backend, llm, ttl: DEFAULT_TTL, max_rounds: DEFAULT_MAX_ROUNDS, sessions: Mutex::new(HashMap::new()) }
    }

    pub fn with_ttl(mut self, ttl: Duration) -> Self {
        self.ttl = ttl;
        self
    }

    fn create(&self) -> String {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let mut map = self.sessions.lock().unwrap();
        self.evict(&mut map);
        let session = Session { state: SessionState::New, dialogue: None, result: None };
        map.insert(id.clone(), Entry { session: Arc::new(tokio::sync::Mutex::new(session)), touched: Instant::now() });
        id
    }

    fn lookup(&self, id: &str) -> Result<Arc<tokio::sync::Mutex<Session>>, ApiError> {
        let mut map = self.sessions.lock().unwrap();
        self.evict(&mut map);
        let entry = map.get_mut(id).ok_or_else(|| ApiError::NotFound(id.to_string()))?;
        entry.touched = Instant::now();
        Ok(entry.session.clone())
    }

    fn evict(&self, map: &mut HashMap<String, Entry>) {
        let ttl = self.ttl;
        map.retain(|_, e| e.touched.elapsed() < ttl);
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreatedResponse {
    pub session_id: String,
}

#[derive(Debug, Deserialize)]
pub struct TextRequest {
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ParseResponse {
    pub intent: ParsedIntent,
    pub summary: String,
    pub bright_sites: Vec<u32>,
    pub dark_sites: Vec<u32>,
    pub feasible_count: usize,
    pub ascii_preview: String,
    pub parser_path: String,
    pub round: usize,
    pub max_rounds: usize,
    pub state: SessionState,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FeedbackResponse {
    pub intent_class: IntentClass,
    pub state: SessionState,
    pub round: usize,
    /// Present after a modification.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub update: Option<ParseResponse>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SitePoint {
    pub id: u32,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OptimizeResponse {
    pub result: OptResult,
    pub config: OptimizerConfig,
    pub bs_position: Point,
    pub sites: Vec<SitePoint>,
    pub loss_trace_url: String,
    pub heatmap_url: String,
}

#[derive(Debug, Deserialize)]
pub struct HeatmapQuery {
    pub res: Option<usize>,
}

fn parse_view(d: &DialogueState, scenario: &Scenario, state: SessionState) -> ParseResponse {
    let cs = &d.current_constraints;
    ParseResponse {
        intent: d.current_intent.clone(),
        summary: cs.summary(),
        bright_sites: cs.bright.clone(),
        dark_sites: cs.dark.clone(),
        feasible_count: cs.feasible.len(),
        ascii_preview: d.preview(scenario),
        parser_path: d.parser_path.as_str().to_string(),
        round: d.round,
        max_rounds: d.max_rounds,
        state,
    }
}

fn illegal(state: SessionState, action: &str) -> ApiError {
    ApiError::Conflict(format!("cannot {action} a session in state {state:?}").to_lowercase())
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::Internal(e.to_string()))
}

async fn create_session(State(app): State<Arc<AppState>>) -> Json<CreatedResponse> {
    Json(CreatedResponse { session_id: app.create() })
}

async fn get_scenario(State(app): State<Arc<AppState>>) -> Json<Scenario> {
    Json(app.backend.scenario.clone())
}

async fn parse(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<TextRequest>,
) -> Result<Json<ParseResponse>, ApiError> {
    let slot = app.lookup(&id)?;
    let mut session = slot.lock().await;
    if session.state != SessionState::New {
        return Err(illegal(session.state, "parse"));
    }
    let worker = app.clone();
    let d = blocking(move || DialogueState::start(&req.text, &worker.backend.scenario, &worker.llm, worker.max_rounds)).await??;
    let view = parse_view(&d, &app.backend.scenario, SessionState::Parsed);
    session.dialogue = Some(d);
    session.state = SessionState::Parsed;
    Ok(Json(view))
}

async fn feedback(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Json(req): Json<TextRequest>,
) -> Result<Json<FeedbackResponse>, ApiError> {
    let slot = app.lookup(&id)?;
    let mut session = slot.lock().await;
    let Some(current) = session.dialogue.clone().filter(|_| session.state == SessionState::Parsed) else {
        return Err(illegal(session.state, "give feedback to"));
    };
    let worker = app.clone();
    let (d, outcome) = blocking(move || {
        let mut d = current;
        let outcome = d.feedback(&req.text, &worker.backend.scenario, &worker.llm);
        (d, outcome)
    })
    .await?;
    let outcome = outcome?;
    let (class, state, update) = match outcome {
        Feedback::Confirmed => (IntentClass::Confirm, SessionState::Confirmed, None),
        Feedback::Modified => {
            (IntentClass::Modify, SessionState::Parsed, Some(parse_view(&d, &app.backend.scenario, SessionState::Parsed)))
        }
    };
    let round = d.round;
    session.dialogue = Some(d);
    session.state = state;
    Ok(Json(FeedbackResponse { intent_class: class, state, round, update }))
}

async fn optimize(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Option<Json<OptimizerConfig>>,
) -> Result<Json<OptimizeResponse>, ApiError> {
    let cfg = body.map(|Json(c)| c).unwrap_or_default();
    let slot = app.lookup(&id)?;
    let mut session = slot.lock().await;
    let cs = match (&session.state, &session.dialogue) {
        (SessionState::Confirmed | SessionState::Optimized, Some(d)) => d.current_constraints.clone(),
        _ => return Err(illegal(session.state, "optimize")),
    };
    let result = match &session.result {
        Some((c, r)) if *c == cfg => r.clone(),
        _ => {
            cfg.validate().map_err(|e| ApiError::Unprocessable(e.to_string()))?;
            let worker = app.clone();
            let c = cfg.clone();
            blocking(move || alternate_optimize(&worker.backend.tensor, &cs, &c)).await?.map_err(|e| ApiError::Unprocessable(e.to_string()))?
        }
    };
    session.result = Some((cfg.clone(), result.clone()));
    session.state = SessionState::Optimized;
    let (x, y) = app.backend.scenario.grid.coords(result.site_index);
    let sites = app.backend.scenario.sites.iter().map(|s| SitePoint { id: s.id, x: s.x, y: s.y }).collect();
    Ok(Json(OptimizeResponse {
        result,
        config: cfg,
        bs_position: Point { x, y },
        sites,
        loss_trace_url: format!("/sessions/{id}/loss_trace"),
        heatmap_url: format!("/sessions/{id}/heatmap"),
    }))
}

fn optimized(session: &Session) -> Result<&OptResult, ApiError> {
    match (&session.state, &session.result) {
        (SessionState::Optimized, Some((_, r))) => Ok(r),
        _ => Err(illegal(session.state, "read results of")),
    }
}

fn csv(body: String) -> impl IntoResponse {
    ([(header::CONTENT_TYPE, "text/csv")], body)
}

async fn heatmap_csv(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<HeatmapQuery>,
) -> Result<impl IntoResponse, ApiError> {
    let res = q.res.unwrap_or(DEFAULT_HEATMAP_RES);
    if !(2..=MAX_HEATMAP_RES).contains(&res) {
        return Err(ApiError::Unprocessable(format!("res must be in 2..={MAX_HEATMAP_RES}")));
    }
    let slot = app.lookup(&id)?;
    let session = slot.lock().await;
    let r = optimized(&session)?.clone();
    if app.backend.world.is_none() {
        return Err(ApiError::Unprocessable("heatmaps need a synthetic scenario".into()));
    }
    let worker = app.clone();
    let map = blocking(move || {
        let world = worker.backend.world.as_ref().expect("checked above");
        heatmap(world, &worker.backend.scenario, r.site_index, &r.precoder, res)
    })
    .await?
    .map_err(|e| ApiError::Unprocessable(e.to_string()))?;
    Ok(csv(map.to_csv()))
}

async fn loss_trace(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let slot = app.lookup(&id)?;
    let session = slot.lock().await;
    Ok(csv(optimized(&session)?.trace_csv()))
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/scenario", get(get_scenario))
        .route("/sessions/{id}/parse", post(parse))
        .route("/sessions/{id}/feedback", post(feedback))
        .route("/sessions/{id}/optimize", post(optimize))
        .route("/sessions/{id}/heatmap", get(heatmap_csv))
        .route("/sessions/{id}/loss_trace", get(loss_trace))
        .layer(CorsLayer::permissive())
        .with_state(app)
}

pub async fn serve(addr: SocketAddr, app: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(app)).await
}
