//! HTTP backend for the recorder UI.
//!
//! Input is forwarded to the device as it arrives and buffered while a
//! recording is active. Device access is serialized; only one recording may
//! be active at a time.

use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;
use wattbench_core::adb::{AdbError, Connection, DeviceProfile, DeviceSerial};
use wattbench_core::automation::{
    escape_input_text, normalize, replay, AutomationError, AutomationScript, AutomationStore, NormalizeConfig,
    RawAction, RawInputEvent, ReplayReport,
};
use wattbench_core::Clock;

#[derive(Debug)]
struct Recording {
    app_id: String,
    label: String,
    events: Vec<RawInputEvent>,
}

#[derive(Debug)]
pub struct Recorder {
    conn: Connection,
    serial: DeviceSerial,
    profile: DeviceProfile,
    store: AutomationStore,
    clock: Arc<dyn Clock>,
    normalize: NormalizeConfig,
    device: Mutex<()>,
    recording: Mutex<Option<Recording>>,
}

impl Recorder {
    pub fn new(
        conn: Connection,
        serial: DeviceSerial,
        profile: DeviceProfile,
        store: AutomationStore,
        clock: Arc<dyn Clock>,
    ) -> Self {
        Self {
            conn,
            serial,
            profile,
            store,
            clock,
            normalize: NormalizeConfig::default(),
            device: Mutex::new(()),
            recording: Mutex::new(None),
        }
    }

    fn device(&self) -> MutexGuard<'_, ()> {
        self.device.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn recording(&self) -> MutexGuard<'_, Option<Recording>> {
        self.recording.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

impl From<AdbError> for ApiError {
    fn from(e: AdbError) -> Self {
        let status = match e {
            AdbError::NoSuchDevice(_) => StatusCode::NOT_FOUND,
            AdbError::Timeout(_) => StatusCode::GATEWAY_TIMEOUT,
            _ => StatusCode::BAD_GATEWAY,
        };
        Self::new(status, e.to_string())
    }
}

impl From<AutomationError> for ApiError {
    fn from(e: AutomationError) -> Self {
        let status = match e {
            AutomationError::NotFound { .. } => StatusCode::NOT_FOUND,
            AutomationError::InvalidName(_) | AutomationError::InvalidScript(_) => StatusCode::BAD_REQUEST,
            AutomationError::UnpairedPointerEvent { .. }
            | AutomationError::CoordinateOutOfBounds { .. }
            | AutomationError::InvalidCommand(_) => StatusCode::UNPROCESSABLE_ENTITY,
            AutomationError::Replay { .. } => StatusCode::BAD_GATEWAY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Runs blocking device work off the async executor.
async fn blocking<T, F>(state: &Arc<Recorder>, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Recorder) -> ApiResult<T> + Send + 'static,
{
    let state = state.clone();
    tokio::task::spawn_blocking(move || f(&state))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

async fn screen(State(state): State<Arc<Recorder>>) -> ApiResult<Response> {
    let png = blocking(&state, |r| {
        let _guard = r.device();
        Ok(r.conn.shell(&r.serial, "screencap -p")?.stdout)
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

async fn profile(State(state): State<Arc<Recorder>>) -> Json<DeviceProfile> {
    Json(state.profile.clone())
}

/// The shell command that injects `event` live.
fn input_command(profile: &DeviceProfile, event: &RawInputEvent) -> ApiResult<String> {
    let motion = |action: &str, x: i64, y: i64| {
        if profile.contains_screen_point(x, y) {
            Ok(format!("input motionevent {action} {x} {y}"))
        } else {
            let (w, h) = profile.screen_size();
            Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                format!("({x}, {y}) is outside the {w}x{h} screen"),
            ))
        }
    };
    match &event.action {
        RawAction::PointerDown { x_px, y_px } => motion("DOWN", *x_px, *y_px),
        RawAction::PointerMove { x_px, y_px } => motion("MOVE", *x_px, *y_px),
        RawAction::PointerUp { x_px, y_px } => motion("UP", *x_px, *y_px),
        RawAction::Text { text } => Ok(format!("input text {}", escape_input_text(text))),
        RawAction::Key { keycode } => Ok(format!("input keyevent {keycode}")),
    }
}

async fn input(State(state): State<Arc<Recorder>>, Json(event): Json<RawInputEvent>) -> ApiResult<StatusCode> {
    let command = input_command(&state.profile, &event)?;
    blocking(&state, move |r| {
        let _guard = r.device();
        r.conn.shell(&r.serial, &command)?;
        if let Some(rec) = r.recording().as_mut() {
            rec.events.push(event);
        }
        Ok(StatusCode::NO_CONTENT)
    })
    .await
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StartRequest {
    pub app: Option<String>,
    pub label: Option<String>,
}

async fn record_start(
    State(state): State<Arc<Recorder>>,
    Json(req): Json<StartRequest>,
) -> ApiResult<StatusCode> {
    let mut slot = state.recording();
    if slot.is_some() {
        return Err(ApiError::new(StatusCode::CONFLICT, "a recording is already active"));
    }
    *slot = Some(Recording {
        app_id: req.app.unwrap_or_else(|| "unknown".into()),
        label: req.label.unwrap_or_else(|| "recording".into()),
        events: Vec::new(),
    });
    Ok(StatusCode::NO_CONTENT)
}

async fn record_stop(State(state): State<Arc<Recorder>>) -> ApiResult<Json<AutomationScript>> {
    let rec = state
        .recording()
        .take()
        .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "no active recording"))?;
    let commands = normalize(&rec.events, &state.profile, &state.normalize)?;
    Ok(Json(AutomationScript {
        app_id: rec.app_id,
        label: rec.label,
        source_profile: state.profile.clone(),
        commands,
    }))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayRequest {
    pub app: String,
    pub label: String,
}

async fn replay_script(
    State(state): State<Arc<Recorder>>,
    Json(req): Json<ReplayRequest>,
) -> ApiResult<Json<ReplayReport>> {
    if state.recording().is_some() {
        return Err(ApiError::new(StatusCode::CONFLICT, "stop the recording before replaying"));
    }
    blocking(&state, move |r| {
        let script = r.store.get(&req.app, &req.label)?;
        let _guard = r.device();
        Ok(Json(replay(&r.conn, &r.serial, &script, &r.profile, r.clock.as_ref())?))
    })
    .await
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaveRequest {
    pub app: String,
    pub label: String,
    pub script: AutomationScript,
}

async fn save(State(state): State<Arc<Recorder>>, Json(req): Json<SaveRequest>) -> ApiResult<StatusCode> {
    blocking(&state, move |r| {
        r.store.put(&req.app, &req.label, &req.script)?;
        Ok(StatusCode::CREATED)
    })
    .await
}

#[derive(Debug, Clone, Deserialize)]
pub struct ListQuery {
    pub app: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct LabelList {
    pub app: String,
    pub labels: Vec<String>,
}

async fn list(State(state): State<Arc<Recorder>>, Query(q): Query<ListQuery>) -> ApiResult<Json<LabelList>> {
    blocking(&state, move |r| {
        let labels = r.store.list(&q.app)?;
        Ok(Json(LabelList { app: q.app, labels }))
    })
    .await
}

/// The API under `/api`, plus the static UI bundle at `/` when given.
pub fn router(state: Arc<Recorder>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/screen", get(screen))
        .route("/api/profile", get(profile))
        .route("/api/input", post(input))
        .route("/api/record/start", post(record_start))
        .route("/api/record/stop", post(record_stop))
        .route("/api/replay", post(replay_script))
        .route("/api/automations", post(save).get(list))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}
