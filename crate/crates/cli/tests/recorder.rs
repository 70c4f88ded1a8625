use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use tower::ServiceExt;
use wattbench_cli::record::{router, Recorder};
use wattbench_core::adb::connect;
use wattbench_core::automation::{normalize, AutomationScript, AutomationStore, NormalizeConfig, RawAction, RawInputEvent};
use wattbench_core::sim::{self, ServerHandle};
use wattbench_core::VirtualClock;

struct Rig {
    app: Router,
    server: ServerHandle,
    _store: tempfile::TempDir,
}

fn rig() -> Rig {
    let clock = Arc::new(VirtualClock::new());
    let config = sim::j7duo();
    let server = sim::serve(config.clone(), clock.clone()).unwrap();
    let conn = connect(server.addr()).unwrap();
    let store = tempfile::tempdir().unwrap();
    let recorder = Recorder::new(
        conn,
        config.profile.serial().clone(),
        config.profile.clone(),
        AutomationStore::new(store.path()),
        clock,
    );
    Rig {
        app: router(Arc::new(recorder), None),
        server,
        _store: store,
    }
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<serde_json::Value>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

fn json(bytes: &[u8]) -> serde_json::Value {
    serde_json::from_slice(bytes).unwrap()
}

fn session() -> Vec<RawInputEvent> {
    vec![
        RawInputEvent::new(0, RawAction::PointerDown { x_px: 360, y_px: 700 }),
        RawInputEvent::new(80, RawAction::PointerUp { x_px: 362, y_px: 701 }),
        RawInputEvent::new(2500, RawAction::PointerDown { x_px: 360, y_px: 1100 }),
        RawInputEvent::new(2600, RawAction::PointerMove { x_px: 360, y_px: 800 }),
        RawInputEvent::new(2700, RawAction::PointerUp { x_px: 360, y_px: 400 }),
        RawInputEvent::new(3000, RawAction::Text { text: "hello world".into() }),
        RawInputEvent::new(3100, RawAction::Key { keycode: 66 }),
    ]
}

#[tokio::test]
async fn screen_and_profile() {
    let rig = rig();
    let (status, png) = call(&rig.app, "GET", "/api/screen", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(&png[..8], b"\x89PNG\r\n\x1a\n");
    let (status, body) = call(&rig.app, "GET", "/api/profile", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(json(&body)["usable_origin_y_px"], 48);
}

#[tokio::test]
async fn recording_matches_normalize() {
    let rig = rig();
    let start = serde_json::json!({"app": "com.android.chrome", "label": "search"});
    assert_eq!(call(&rig.app, "POST", "/api/record/start", Some(start.clone())).await.0, StatusCode::NO_CONTENT);
    assert_eq!(call(&rig.app, "POST", "/api/record/start", Some(start)).await.0, StatusCode::CONFLICT);
    for e in session() {
        let (status, body) = call(&rig.app, "POST", "/api/input", Some(serde_json::to_value(&e).unwrap())).await;
        assert_eq!(status, StatusCode::NO_CONTENT, "{}", String::from_utf8_lossy(&body));
    }
    let (status, body) = call(&rig.app, "POST", "/api/record/stop", None).await;
    assert_eq!(status, StatusCode::OK);
    let script: AutomationScript = serde_json::from_slice(&body).unwrap();
    let profile = sim::j7duo().profile;
    let expected = normalize(&session(), &profile, &NormalizeConfig::default()).unwrap();
    assert_eq!(script.commands, expected);
    assert_eq!((script.app_id.as_str(), script.label.as_str()), ("com.android.chrome", "search"));

    // Input reached the device as it was sent.
    let dev = rig.server.device("J7DUO").unwrap();
    let inputs: Vec<String> = dev.lock().input_log().iter().map(|e| e.command.clone()).collect();
    assert_eq!(inputs[0], "input motionevent DOWN 360 700");
    assert_eq!(inputs.last().unwrap(), "input keyevent 66");

    assert_eq!(call(&rig.app, "POST", "/api/record/stop", None).await.0, StatusCode::CONFLICT);
}

#[tokio::test]
async fn save_list_and_replay() {
    let rig = rig();
    let profile = sim::j7duo().profile;
    let commands = normalize(&session(), &profile, &NormalizeConfig::default()).unwrap();
    let script = AutomationScript {
        app_id: "com.android.chrome".into(),
        label: "search".into(),
        source_profile: profile,
        commands,
    };
    let body = serde_json::json!({"app": "com.android.chrome", "label": "search", "script": script});
    assert_eq!(call(&rig.app, "POST", "/api/automations", Some(body)).await.0, StatusCode::CREATED);

    let (status, body) = call(&rig.app, "GET", "/api/automations?app=com.android.chrome", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(json(&body)["labels"], serde_json::json!(["search"]));

    let req = serde_json::json!({"app": "com.android.chrome", "label": "search"});
    let (status, body) = call(&rig.app, "POST", "/api/replay", Some(req)).await;
    assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&body));
    assert_eq!(json(&body)["commands_sent"], script.commands.len());

    let missing = serde_json::json!({"app": "com.android.chrome", "label": "nope"});
    assert_eq!(call(&rig.app, "POST", "/api/replay", Some(missing)).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn bad_requests() {
    let rig = rig();
    let off = serde_json::json!({"ts_ms": 0, "kind": "pointer_down", "x_px": 5000, "y_px": 1});
    assert_eq!(call(&rig.app, "POST", "/api/input", Some(off)).await.0, StatusCode::BAD_REQUEST);
    let garbage = serde_json::json!({"ts_ms": 0, "kind": "wave"});
    assert!(call(&rig.app, "POST", "/api/input", Some(garbage)).await.0.is_client_error());

    let wrong_key = serde_json::json!({
        "app": "a.b", "label": "x",
        "script": {"app_id": "c.d", "label": "x", "source_profile": sim::j7duo().profile, "commands": [{"kind": "key", "keycode": 4}]}
    });
    assert_eq!(call(&rig.app, "POST", "/api/automations", Some(wrong_key)).await.0, StatusCode::BAD_REQUEST);

    // A recording that ends mid-gesture cannot be normalized.
    call(&rig.app, "POST", "/api/record/start", Some(serde_json::json!({}))).await;
    let down = serde_json::json!({"ts_ms": 0, "kind": "pointer_down", "x_px": 10, "y_px": 100});
    call(&rig.app, "POST", "/api/input", Some(down)).await;
    assert_eq!(call(&rig.app, "POST", "/api/record/stop", None).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(call(&rig.app, "GET", "/api/nothing", None).await.0, StatusCode::NOT_FOUND);
}
