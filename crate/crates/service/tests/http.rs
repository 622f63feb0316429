use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use backcompat_caja::{run_scripted_player, Action, GameConfig, GameSession, Money, PlayerKind};
use backcompat_service::{router, AppState, Store};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn app(dir: &std::path::Path) -> Router {
    router(AppState::new(Store::open(dir).unwrap(), GameConfig::default()))
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, String) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn call_json(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, text) = call(app, method, uri, body).await;
    (status, serde_json::from_str(&text).unwrap_or(Value::Null))
}

async fn create(app: &Router, config: Value) -> String {
    let (status, body) = call_json(app, Method::POST, "/sessions", Some(config)).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["session_id"].as_str().unwrap().to_string()
}

async fn act(app: &Router, id: &str, action: &str, cycle: Option<usize>) -> (StatusCode, Value) {
    let mut body = json!({ "action": action });
    if let Some(c) = cycle {
        body["cycle"] = json!(c);
    }
    call_json(app, Method::POST, &format!("/sessions/{id}/action"), Some(body)).await
}

#[tokio::test]
async fn default_session_shape() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, body) = call_json(&app, Method::POST, "/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(body["total_cycles"], 150);
    assert_eq!(body["config"]["update_cycle"], 75);
    assert_eq!(body["status"], "active");
    assert_eq!(body["step"]["cycle"], 0);
    assert_eq!(body["step"]["next_object"]["t"], 1);
    assert!(body["config"].get("seed").is_none());
    assert!(body["config"].get("pre_boundary").is_none());
    assert!(dir.path().join(format!("{}.jsonl", body["session_id"].as_str().unwrap())).exists());
}

#[tokio::test]
async fn validation_errors_name_fields() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, body) =
        call_json(&app, Method::POST, "/sessions", Some(json!({"update_cycle": 151}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["fields"][0]["field"], "update_cycle");

    let (status, _) = call_json(&app, Method::POST, "/sessions", Some(json!({"cycles": 3}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&app, Method::POST, "/sessions", Some(json!([1, 2]))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn ids_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let a = create(&app, json!({})).await;
    let b = create(&app, json!({})).await;
    assert_ne!(a, b);
}

#[tokio::test]
async fn first_accept_pays_the_table_cell() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let config = GameConfig::default().with_seed(11);
    let fixture = GameSession::new(config.clone()).unwrap();
    let first = &fixture.stream().objects[0];
    let id = create(&app, serde_json::to_value(&config).unwrap()).await;
    let (status, body) = act(&app, &id, "accept", Some(1)).await;
    assert_eq!(status, StatusCode::OK);
    let expected = if first.ai_errs { -0.16 } else { 0.04 };
    assert_eq!(body["reward"], json!(expected));
    assert_eq!(body["ai_was_correct"], json!(!first.ai_errs));
    assert_eq!(body["next_object"]["t"], 2);
}

#[tokio::test]
async fn duplicates_do_not_advance() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = create(&app, json!({"seed": 5})).await;
    let (_, first) = act(&app, &id, "accept", Some(1)).await;
    let (status, again) = act(&app, &id, "accept", Some(1)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(first, again);
    let (_, summary) = call_json(&app, Method::GET, &format!("/sessions/{id}/summary"), None).await;
    assert_eq!(summary["cycle"], 1);

    let (status, _) = act(&app, &id, "compute", Some(1)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, _) = act(&app, &id, "compute", Some(3)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (status, body) = act(&app, &id, "compute", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["cycle"], 2);
}

#[tokio::test]
async fn malformed_actions_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = create(&app, json!({})).await;
    let uri = format!("/sessions/{id}/action");
    for bad in [json!({"action": "guess"}), json!({}), json!({"action": "accept", "extra": 1})] {
        let (status, _) = call_json(&app, Method::POST, &uri, Some(bad)).await;
        assert_eq!(status, StatusCode::BAD_REQUEST);
    }
}

#[tokio::test]
async fn unknown_sessions_are_404() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    assert_eq!(act(&app, "nope", "accept", None).await.0, StatusCode::NOT_FOUND);
    for suffix in ["summary", "trace"] {
        let (status, _) = call(&app, Method::GET, &format!("/sessions/nope/{suffix}"), None).await;
        assert_eq!(status, StatusCode::NOT_FOUND);
    }
}

#[tokio::test]
async fn oracle_playthrough_matches_engine() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let config = GameConfig::default().with_seed(21);
    let engine = run_scripted_player(&config, PlayerKind::Oracle).unwrap();
    let id = create(&app, serde_json::to_value(&config).unwrap()).await;
    let mut last = Value::Null;
    for (i, record) in engine.trace.iter().enumerate() {
        let (status, body) = act(&app, &id, &record.action.to_string(), Some(i + 1)).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(body["reward"], json!(record.reward.dollars()));
        if i == 40 {
            let (_, s) = call_json(&app, Method::GET, &format!("/sessions/{id}/summary"), None).await;
            assert_eq!(s["cycle"], 41);
            assert_eq!(s["score"], json!(record.score_after.dollars()));
        }
        last = body;
    }
    assert_eq!(last["finished"], true);
    assert_eq!(last["final_score"], json!(engine.score.dollars()));
    assert!(last["next_object"].is_null());

    let (_, s) = call_json(&app, Method::GET, &format!("/sessions/{id}/summary"), None).await;
    assert_eq!(s["status"], "finished");
    assert_eq!(s["score"], json!(engine.score.dollars()));
    let pre: Money = serde_json::from_value(s["pre_update_score"].clone()).unwrap();
    let post: Money = serde_json::from_value(s["post_update_score"].clone()).unwrap();
    assert_eq!(pre, engine.pre_update_score);
    assert_eq!(pre + post, engine.score);
    assert_eq!(s["action_counts"]["accept"].as_u64().unwrap() + s["action_counts"]["compute"].as_u64().unwrap(), 150);

    assert_eq!(act(&app, &id, "accept", None).await.0, StatusCode::CONFLICT);

    let (status, trace) = call(&app, Method::GET, &format!("/sessions/{id}/trace"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(trace.lines().count(), 150);
    let first: Value = serde_json::from_str(trace.lines().next().unwrap()).unwrap();
    assert_eq!(first["t"], 1);
}

#[tokio::test]
async fn responses_hide_the_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (_, created) = call(&app, Method::POST, "/sessions", Some(json!({"seed": 3}))).await;
    let id = serde_json::from_str::<Value>(&created).unwrap()["session_id"].as_str().unwrap().to_string();
    let (_, step) = call(&app, Method::POST, &format!("/sessions/{id}/action"), Some(json!({"action": "accept"}))).await;
    let (_, summary) = call(&app, Method::GET, &format!("/sessions/{id}/summary"), None).await;
    let (_, trace) = call(&app, Method::GET, &format!("/sessions/{id}/trace"), None).await;
    for text in [created, step, summary, trace] {
        for secret in ["literals", "\"seed\"", "in_boundary", "ai_errs", "label"] {
            assert!(!text.contains(secret), "{secret} leaked in {text}");
        }
    }
}

#[tokio::test]
async fn restart_replays_logs() {
    let dir = tempfile::tempdir().unwrap();
    let id;
    let before;
    {
        let app = app(dir.path());
        id = create(&app, json!({"seed": 8})).await;
        for i in 0..30 {
            act(&app, &id, if i % 2 == 0 { "accept" } else { "compute" }, None).await;
        }
        before = call(&app, Method::GET, &format!("/sessions/{id}/trace"), None).await.1;
    }
    let app = app(dir.path());
    let after = call(&app, Method::GET, &format!("/sessions/{id}/trace"), None).await.1;
    assert_eq!(before, after);
    let (status, body) = act(&app, &id, "accept", Some(31)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["cycle"], 31);
}

#[tokio::test]
async fn torn_tail_is_dropped_on_restart() {
    let dir = tempfile::tempdir().unwrap();
    let id = {
        let app = app(dir.path());
        let id = create(&app, json!({})).await;
        act(&app, &id, "accept", None).await;
        id
    };
    let log = dir.path().join(format!("{id}.jsonl"));
    let mut text = std::fs::read_to_string(&log).unwrap();
    text.push_str("{\"event\":\"action\",\"cyc");
    std::fs::write(&log, text).unwrap();

    let app = app(dir.path());
    let (_, s) = call_json(&app, Method::GET, &format!("/sessions/{id}/summary"), None).await;
    assert_eq!(s["cycle"], 1);
    act(&app, &id, "compute", None).await;
    let reopened = backcompat_service::replay_log(&log).unwrap();
    assert_eq!(reopened.session.cursor(), 2);
    assert_eq!(reopened.session.trace()[1].action, Action::Compute);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn racing_submissions_step_once() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = create(&app, json!({})).await;
    for cycle in 1..=20 {
        let tasks: Vec<_> = (0..4)
            .map(|k| {
                let (app, id) = (app.clone(), id.clone());
                let action = if k % 2 == 0 { "accept" } else { "compute" };
                tokio::spawn(async move { act(&app, &id, action, Some(cycle)).await.0 })
            })
            .collect();
        let mut ok = 0;
        for t in tasks {
            match t.await.unwrap() {
                StatusCode::OK => ok += 1,
                StatusCode::CONFLICT => {}
                other => panic!("unexpected {other}"),
            }
        }
        // the winner and its same-action twin succeed, the other two conflict
        assert_eq!(ok, 2);
    }
    let (_, s) = call_json(&app, Method::GET, &format!("/sessions/{id}/summary"), None).await;
    assert_eq!(s["cycle"], 20);
}
