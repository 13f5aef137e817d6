//! HTTP API for listening sessions.
//!
//! Every state change is appended to the event log before it is applied and
//! acknowledged. Each session is guarded by its own lock; the log has one
//! writer lock shared by all sessions.

use std::collections::{BTreeMap, HashMap};
use std::io::Cursor;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use anonbench_core::protocol::view::{CurrentView, ErrorBody, PlayAck, ResponseAck, SessionCreated};
use anonbench_core::protocol::{
    generate_session, Condition, ProtocolError, SessionEvent, SessionState, Slot, StudyConfig,
};
use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use thiserror::Error;
use tokio::sync::{Mutex, OwnedMutexGuard};

use crate::report::{generate_report, ReportInput};
use crate::snapshot::{replay, ReplayError};
use crate::store::{EventLog, StoreError, StoreEvent};

/// Header carrying the shared study key when one is configured.
pub const STUDY_KEY_HEADER: &str = "x-study-key";

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("no audio file for stimulus {stimulus:?} in {dir}")]
    MissingAudio { stimulus: String, dir: PathBuf },
    #[error("the store was created for a different study configuration")]
    ConfigMismatch,
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub study: StudyConfig,
    pub audio_dir: PathBuf,
    pub store_path: PathBuf,
    pub study_key: Option<String>,
}

struct Live {
    session_id: String,
    tokens: BTreeMap<String, String>,
    state: SessionState,
}

impl Live {
    fn view(&self) -> CurrentView {
        CurrentView::of(&self.state, |stimulus| self.tokens[stimulus].clone())
    }
}

#[derive(Default)]
struct Registry {
    by_id: HashMap<String, Arc<Mutex<Live>>>,
    by_listener: HashMap<String, String>,
    /// Audio token to stimulus id.
    audio_tokens: HashMap<String, String>,
}

pub struct AppState {
    study: StudyConfig,
    audio: HashMap<String, PathBuf>,
    store: std::sync::Mutex<EventLog>,
    registry: RwLock<Registry>,
    create_lock: Mutex<()>,
    study_key: Option<String>,
}

fn resolve_audio(dir: &Path, stimulus: &str) -> Option<PathBuf> {
    [dir.join(stimulus), dir.join(format!("{stimulus}.wav"))].into_iter().find(|p| p.is_file())
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

fn random_id() -> String {
    format!("{:032x}", rand::random::<u128>())
}

impl AppState {
    /// Validates the study, resolves every stimulus to a file, opens the log
    /// and rebuilds all sessions from it.
    pub fn open(config: ServiceConfig) -> Result<Arc<Self>, ServiceError> {
        config.study.validate()?;
        let mut audio = HashMap::new();
        for pair in &config.study.pairs {
            for stimulus in [&pair.orig, &pair.anon] {
                let path = resolve_audio(&config.audio_dir, stimulus).ok_or_else(|| ServiceError::MissingAudio {
                    stimulus: stimulus.clone(),
                    dir: config.audio_dir.clone(),
                })?;
                audio.insert(stimulus.clone(), path);
            }
        }

        let mut log = EventLog::open(&config.store_path)?;
        match log.events().first() {
            None => log.append(StoreEvent::Study { config: config.study.clone() })?,
            Some(StoreEvent::Study { config: stored }) if *stored == config.study => {}
            Some(_) => return Err(ServiceError::ConfigMismatch),
        }
        let snapshot = replay(log.events())?;

        let mut registry = Registry::default();
        for s in snapshot.sessions {
            for (stimulus, token) in &s.tokens {
                registry.audio_tokens.insert(token.clone(), stimulus.clone());
            }
            registry.by_listener.insert(s.listener_id.clone(), s.session_id.clone());
            let live = Live { session_id: s.session_id.clone(), tokens: s.tokens, state: s.state };
            registry.by_id.insert(s.session_id, Arc::new(Mutex::new(live)));
        }
        log::info!(
            "study with {} pairs, {} sessions restored from {}",
            config.study.pairs.len(),
            registry.by_id.len(),
            log.path().display()
        );

        Ok(Arc::new(Self {
            study: config.study,
            audio,
            store: std::sync::Mutex::new(log),
            registry: RwLock::new(registry),
            create_lock: Mutex::new(()),
            study_key: config.study_key,
        }))
    }

    fn persist(&self, event: StoreEvent) -> Result<(), ApiError> {
        self.store.lock().expect("store lock").append(event).map_err(|e| {
            log::error!("store write failed: {e}");
            ApiError::internal(e.to_string())
        })
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Live>>, ApiError> {
        let reg = self.registry.read().expect("registry lock");
        reg.by_id
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id}")))
    }

    /// Current report as JSON text, computed from a copy of the log.
    pub fn report_json(&self) -> Result<String, ApiError> {
        let events = self.store.lock().expect("store lock").events().to_vec();
        let snapshot = replay(&events).map_err(|e| ApiError::internal(e.to_string()))?;
        let input = ReportInput::from_snapshot(&snapshot).map_err(|e| ApiError::internal(e.to_string()))?;
        let report = generate_report(&input).map_err(|e| ApiError::internal(e.to_string()))?;
        Ok(report.to_json())
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<ProtocolError> for ApiError {
    fn from(e: ProtocolError) -> Self {
        let (status, code) = match &e {
            ProtocolError::ReplayForbidden { .. } => (StatusCode::CONFLICT, "replay_forbidden"),
            ProtocolError::DuplicateResponse(_) => (StatusCode::CONFLICT, "duplicate_response"),
            ProtocolError::OutOfPhaseEvent(_) => (StatusCode::CONFLICT, "out_of_phase"),
            ProtocolError::InvalidRating(_) => (StatusCode::BAD_REQUEST, "invalid_rating"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody { error: self.code.to_string(), message: self.message };
        (self.status, Json(body)).into_response()
    }
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed", e.to_string()))
}

#[derive(Deserialize)]
struct CreateBody {
    listener_id: String,
}

#[derive(Deserialize)]
struct TrialBody {
    condition: Condition,
    trial: usize,
    slot: Slot,
}

#[derive(Deserialize)]
struct RatingBody {
    item: usize,
    rating: u8,
}

async fn create_session(State(app): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let CreateBody { listener_id } = parse(&body)?;
    let listener_id = listener_id.trim().to_string();
    if listener_id.is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "malformed", "listener_id is empty"));
    }
    if !app.study.listeners.is_empty() && app.study.listener(&listener_id).is_none() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "unknown_listener", format!("{listener_id} is not on the roster")));
    }

    let _guard = app.create_lock.lock().await;
    let existing = app.registry.read().expect("registry lock").by_listener.get(&listener_id).cloned();
    if let Some(id) = existing {
        let live = app.session(&id)?;
        let live = live.lock().await;
        let body = SessionCreated { session_id: live.session_id.clone(), current: live.view() };
        return Ok((StatusCode::OK, Json(body)).into_response());
    }

    let plan = generate_session(&app.study, &listener_id)?;
    let session_id = random_id();
    let mut tokens = BTreeMap::new();
    {
        let reg = app.registry.read().expect("registry lock");
        for pair in &app.study.pairs {
            for stimulus in [&pair.orig, &pair.anon] {
                let token = loop {
                    let t = random_id();
                    if !reg.audio_tokens.contains_key(&t) && !tokens.values().any(|v| *v == t) {
                        break t;
                    }
                };
                tokens.insert(stimulus.clone(), token);
            }
        }
    }
    app.persist(StoreEvent::SessionCreated {
        session_id: session_id.clone(),
        listener_id: listener_id.clone(),
        tokens: tokens.clone(),
        timestamp_ms: now_ms(),
    })?;

    let live = Live { session_id: session_id.clone(), tokens, state: SessionState::new(plan) };
    let body = SessionCreated { session_id: session_id.clone(), current: live.view() };
    let mut reg = app.registry.write().expect("registry lock");
    for (stimulus, token) in &live.tokens {
        reg.audio_tokens.insert(token.clone(), stimulus.clone());
    }
    reg.by_listener.insert(listener_id.clone(), session_id.clone());
    reg.by_id.insert(session_id, Arc::new(Mutex::new(live)));
    log::info!("session created for listener {listener_id}");
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn current(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Json<CurrentView>, ApiError> {
    let live = app.session(&id)?;
    let live = live.lock().await;
    Ok(Json(live.view()))
}

/// Validates on a copy, persists, then commits. The session stays locked
/// until the returned guard is dropped.
async fn advance(app: &AppState, id: &str, event: SessionEvent) -> Result<OwnedMutexGuard<Live>, ApiError> {
    let live = app.session(id)?;
    let mut live = live.lock_owned().await;
    live.state.check(&event)?;
    let ts = now_ms();
    let mut next = live.state.clone();
    let record = next.apply(&event, ts)?;
    let stored = match (&event, &record) {
        (SessionEvent::Play { condition, trial, slot }, None) => StoreEvent::Play {
            session_id: id.to_string(),
            condition: *condition,
            trial: *trial,
            slot: *slot,
            timestamp_ms: ts,
        },
        (_, Some(r)) => StoreEvent::Response { session_id: id.to_string(), record: r.clone() },
        _ => return Err(ApiError::internal("event produced no record")),
    };
    app.persist(stored)?;
    live.state = next;
    Ok(live)
}

async fn play(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>, body: Bytes) -> Result<Json<PlayAck>, ApiError> {
    let TrialBody { condition, trial, slot } = parse(&body)?;
    let live = advance(&app, &id, SessionEvent::Play { condition, trial, slot }).await?;
    let play_count = match live.view() {
        CurrentView::ZeroShot(v) | CurrentView::FewShot(v) => match slot {
            Slot::A => v.a.play_count,
            Slot::B => v.b.play_count,
        },
        _ => return Err(ApiError::internal("play left the discrimination phase")),
    };
    let plays_remaining = (condition == Condition::ZeroShot).then(|| 1u32.saturating_sub(play_count));
    Ok(Json(PlayAck { slot, play_count, plays_remaining }))
}

async fn choice(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>, body: Bytes) -> Result<Json<ResponseAck>, ApiError> {
    let TrialBody { condition, trial, slot } = parse(&body)?;
    let live = advance(&app, &id, SessionEvent::Choose { condition, trial, slot }).await?;
    Ok(Json(ResponseAck { recorded: true, next: live.view() }))
}

async fn rating(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>, body: Bytes) -> Result<Json<ResponseAck>, ApiError> {
    let RatingBody { item, rating } = parse(&body)?;
    let live = advance(&app, &id, SessionEvent::Rate { item, rating }).await?;
    Ok(Json(ResponseAck { recorded: true, next: live.view() }))
}

/// Re-encodes the samples into a bare RIFF/WAVE so no source chunk (names,
/// tags, timestamps) reaches the client.
fn clean_wav(bytes: &[u8]) -> Result<Vec<u8>, hound::Error> {
    let mut reader = hound::WavReader::new(Cursor::new(bytes))?;
    let spec = reader.spec();
    let mut out = Cursor::new(Vec::new());
    {
        let mut writer = hound::WavWriter::new(&mut out, spec)?;
        match spec.sample_format {
            hound::SampleFormat::Int => {
                for s in reader.samples::<i32>() {
                    writer.write_sample(s?)?;
                }
            }
            hound::SampleFormat::Float => {
                for s in reader.samples::<f32>() {
                    writer.write_sample(s?)?;
                }
            }
        }
        writer.finalize()?;
    }
    Ok(out.into_inner())
}

async fn audio(State(app): State<Arc<AppState>>, UrlPath(token): UrlPath<String>) -> Result<Response, ApiError> {
    let stimulus = app.registry.read().expect("registry lock").audio_tokens.get(&token).cloned();
    let path = stimulus
        .and_then(|s| app.audio.get(&s).cloned())
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_token", "no such audio token"))?;
    let raw = tokio::fs::read(&path).await.map_err(|e| {
        log::error!("{}: {e}", path.display());
        ApiError::internal("audio unavailable")
    })?;
    let wav = clean_wav(&raw).map_err(|e| {
        log::error!("{}: {e}", path.display());
        ApiError::internal("audio unavailable")
    })?;
    Ok(([(header::CONTENT_TYPE, "audio/wav")], wav).into_response())
}

async fn report(State(app): State<Arc<AppState>>) -> Result<Response, ApiError> {
    let json = app.report_json()?;
    Ok(([(header::CONTENT_TYPE, "application/json")], json).into_response())
}

/// Audio tokens are capabilities in their own right, so `/audio` is exempt
/// and can be fetched by a plain `<audio>` element.
async fn require_key(State(app): State<Arc<AppState>>, req: Request, next: Next) -> Response {
    if let Some(key) = &app.study_key {
        let exempt = req.uri().path().starts_with("/audio/");
        let given = req.headers().get(STUDY_KEY_HEADER).and_then(|v| v.to_str().ok());
        if !exempt && given != Some(key.as_str()) {
            return ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or wrong study key").into_response();
        }
    }
    next.run(req).await
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/session", post(create_session))
        .route("/session/{id}/current", get(current))
        .route("/session/{id}/play", post(play))
        .route("/session/{id}/choice", post(choice))
        .route("/session/{id}/rating", post(rating))
        .route("/audio/{token}", get(audio))
        .route("/report", get(report))
        .layer(middleware::from_fn_with_state(app.clone(), require_key))
        .with_state(app)
}

/// Serves until Ctrl-C.
pub async fn serve(app: Arc<AppState>, bind: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(app))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
