use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use fmcq_service::{router, AppState};

const SURVEY: &str = include_str!("../../core/tests/fixtures/survey.fm");
const SURVEY_SXFM: &str = include_str!("../../core/tests/fixtures/survey.xml");

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

async fn with_survey() -> (Router, String) {
    let app = router(Arc::new(AppState::default()));
    let (status, body) = call(&app, "POST", "/models", Some(json!({ "source": SURVEY, "format": "native" }))).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    (app, body["model_id"].as_str().unwrap().to_string())
}

#[tokio::test]
async fn upload_reports_stats_and_tree() {
    let (app, id) = with_survey().await;
    let (status, body) = call(&app, "GET", &format!("/models/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["api_version"], 1);
    assert_eq!(body["stats"]["features"], 9);
    assert_eq!(body["stats"]["leaves"], 6);
    assert_eq!(body["features"].as_array().unwrap().len(), 9);
    assert_eq!(body["constraints"].as_array().unwrap().len(), 2);
    assert_eq!(body["formulas"][7]["text"], "!(t=1) | !(n=1)");
}

#[tokio::test]
async fn sxfm_upload_is_detected() {
    let app = router(Arc::new(AppState::default()));
    let (status, body) = call(&app, "POST", "/models", Some(json!({ "source": SURVEY_SXFM }))).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    assert_eq!(body["stats"]["cross_tree_constraints"], 2);
}

#[tokio::test]
async fn malformed_model_is_rejected() {
    let app = router(Arc::new(AppState::default()));
    let (status, body) = call(&app, "POST", "/models", Some(json!({ "source": "feature r root\n      feature x optional\n" }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["kind"], "model_parse");
}

#[tokio::test]
async fn example_query_is_sat_with_one_configuration() {
    let (app, id) = with_survey().await;
    let (status, body) = call(
        &app,
        "POST",
        &format!("/models/{id}/solve"),
        Some(json!({ "repr": "per-feature", "cr": "s=1,p=1,n=1,mm=0", "count": true })),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["verdict"], "SAT");
    let configs = body["configurations"].as_array().unwrap();
    assert_eq!(configs.len(), 1);
    assert_eq!(configs[0]["n"], 1);
    assert_eq!(configs[0]["mm"], 0);
    assert_eq!(body["count"], 2);
    assert!(body["timing"]["query_ms"].as_f64().is_some());
}

#[tokio::test]
async fn solve_with_limit_and_object_requirements() {
    let (app, id) = with_survey().await;
    for repr in ["all", "per-feature", "per-constraint", "csp"] {
        let (status, body) = call(
            &app,
            "POST",
            &format!("/models/{id}/solve"),
            Some(json!({ "repr": repr, "cr": { "n": 1, "mm": false }, "limit": 10 })),
        )
        .await;
        assert_eq!(status, StatusCode::OK, "{body}");
        assert_eq!(body["configurations"].as_array().unwrap().len(), 2, "{repr}");
    }
}

#[tokio::test]
async fn unknown_feature_lists_bad_atoms() {
    let (app, id) = with_survey().await;
    let (status, body) = call(&app, "POST", &format!("/models/{id}/solve"), Some(json!({ "cr": "xyz=1,t=2" }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["kind"], "validation");
    let atoms: Vec<&str> = body["error"]["bad_atoms"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["atom"].as_str().unwrap())
        .collect();
    assert_eq!(atoms, ["xyz=1", "t=2"]);
}

#[tokio::test]
async fn excluded_pair_is_unsat() {
    let (app, id) = with_survey().await;
    let (_, body) = call(&app, "POST", &format!("/models/{id}/solve"), Some(json!({ "cr": "t=1,n=1" }))).await;
    assert_eq!(body["verdict"], "UNSAT");
    assert_eq!(body["configurations"], json!([]));
}

#[tokio::test]
async fn unknown_model_and_session_are_not_found() {
    let app = router(Arc::new(AppState::default()));
    let (status, body) = call(&app, "POST", "/models/nope/solve", Some(json!({}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"]["kind"], "not_found");
    let (status, _) = call(&app, "GET", "/models/nope/analysis", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "POST", "/sessions/nope/step", Some(json!({ "unset": "t" }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "POST", "/sessions", Some(json!({ "model_id": "nope" }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn malformed_json_is_bad_request() {
    let (app, id) = with_survey().await;
    let req = Request::builder()
        .method("POST")
        .uri(format!("/models/{id}/solve"))
        .header("content-type", "application/json")
        .body(Body::from("{not json"))
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn count_and_too_large_error() {
    let (app, id) = with_survey().await;
    let (_, body) = call(&app, "POST", &format!("/models/{id}/count"), Some(json!({ "repr": "csp", "cr": "mm=0" }))).await;
    assert_eq!(body["count"], 5);
    let (_, body) = call(&app, "POST", &format!("/models/{id}/count"), Some(json!({ "cap": 4 }))).await;
    assert_eq!(body["count"], 4);
    assert_eq!(body["capped"], true);

    let big = fmcq_core::io::serialize_native(&fmcq_core::generate::webarch_like_model());
    let (_, created) = call(&app, "POST", "/models", Some(json!({ "source": big }))).await;
    let big_id = created["model_id"].as_str().unwrap();
    let (status, body) = call(&app, "POST", &format!("/models/{big_id}/solve"), Some(json!({ "repr": "all" }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["error"]["kind"], "too_large");
    let (status, body) = call(&app, "POST", &format!("/models/{big_id}/solve"), Some(json!({ "repr": "per-constraint" }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["verdict"], "SAT");
}

#[tokio::test]
async fn diagnose_endpoint() {
    let (app, id) = with_survey().await;
    let (status, body) = call(&app, "POST", &format!("/models/{id}/diagnose"), Some(json!({ "cr": "n=1,t=1" }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["consistent"], false);
    assert_eq!(body["complete"], true);
    let deltas: Vec<&Value> = body["diagnoses"].as_array().unwrap().iter().map(|d| &d["delta"]).collect();
    assert_eq!(deltas, [&json!({ "n": 1 }), &json!({ "t": 1 })]);
    assert_eq!(body["diagnoses"][1]["repaired"], json!({ "n": 1, "t": 0 }));

    let (_, body) = call(&app, "POST", &format!("/models/{id}/diagnose"), Some(json!({ "cr": "n=1" }))).await;
    assert_eq!(body["consistent"], true);
    assert_eq!(body["diagnoses"], json!([]));
}

#[tokio::test]
async fn analysis_endpoint() {
    let (app, id) = with_survey().await;
    let (status, body) = call(&app, "GET", &format!("/models/{id}/analysis"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["void"], false);
    assert_eq!(body["dead"], json!([]));
    assert_eq!(body["configuration_count"], 15);
}

async fn new_session(app: &Router, id: &str) -> (String, Value) {
    let (status, body) = call(app, "POST", "/sessions", Some(json!({ "model_id": id }))).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    (body["session_id"].as_str().unwrap().to_string(), body)
}

#[tokio::test]
async fn session_conflict_surfaces_repair_for_t() {
    let (app, id) = with_survey().await;
    let (sid, fresh) = new_session(&app, &id).await;
    assert_eq!(fresh["remaining"], 15);
    assert_eq!(fresh["forced"], json!({ "s": 1, "p": 1, "q": 1 }));

    let step = format!("/sessions/{sid}/step");
    let (_, body) = call(&app, "POST", &step, Some(json!({ "set": "n=1" }))).await;
    assert_eq!(body["consistent"], true);
    assert_eq!(body["forced"]["t"], 0);
    assert_eq!(body["forced"]["l"], 0);

    let (_, body) = call(&app, "POST", &step, Some(json!({ "set": { "t": 1 } }))).await;
    assert_eq!(body["consistent"], false);
    assert_eq!(body["remaining"], 0);
    let diagnoses = body["diagnoses"].as_array().unwrap();
    let repair = diagnoses.iter().find(|d| d["delta"] == json!({ "t": 1 })).expect("repair for t");
    assert_eq!(repair["suggested"], json!({ "t": 0 }));

    // Applying the repair restores consistency.
    let (_, body) = call(&app, "POST", &step, Some(json!({ "set": repair["suggested"].clone() }))).await;
    assert_eq!(body["consistent"], true);
    assert_eq!(body["cr"], json!({ "n": 1, "t": 0 }));

    let (_, state) = call(&app, "GET", &format!("/sessions/{sid}"), None).await;
    assert_eq!(state["cr"], body["cr"]);
}

#[tokio::test]
async fn session_mm_zero_leaves_five() {
    let (app, id) = with_survey().await;
    let (sid, _) = new_session(&app, &id).await;
    let (_, body) = call(&app, "POST", &format!("/sessions/{sid}/step"), Some(json!({ "set": "mm=0" }))).await;
    assert_eq!(body["consistent"], true);
    assert_eq!(body["remaining"], 5);
    assert_eq!(body["forced"]["m"], 1);
}

#[tokio::test]
async fn unset_of_unbound_feature_is_a_no_op() {
    let (app, id) = with_survey().await;
    let (sid, fresh) = new_session(&app, &id).await;
    let (status, body) = call(&app, "POST", &format!("/sessions/{sid}/step"), Some(json!({ "unset": "t" }))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, fresh);

    let (status, _) = call(&app, "POST", &format!("/sessions/{sid}/step"), Some(json!({ "unset": "xyz" }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "POST", &format!("/sessions/{sid}/step"), Some(json!({ "set": "xyz=1" }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "POST", &format!("/sessions/{sid}/step"), Some(json!({}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn idle_sessions_expire() {
    let state = Arc::new(AppState::with_ttl(Duration::from_millis(50)));
    let app = router(state.clone());
    let (_, created) = call(&app, "POST", "/models", Some(json!({ "source": SURVEY }))).await;
    let (sid, _) = new_session(&app, created["model_id"].as_str().unwrap()).await;
    assert_eq!(state.session_count(), 1);
    tokio::time::sleep(Duration::from_millis(120)).await;
    let (status, _) = call(&app, "GET", &format!("/sessions/{sid}"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(state.session_count(), 0);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_steps_are_serialized() {
    let (app, id) = with_survey().await;
    let (sid, _) = new_session(&app, &id).await;
    let step = format!("/sessions/{sid}/step");
    let mut tasks = Vec::new();
    for atom in ["l=1", "st=1", "m=1", "mm=1"] {
        let app = app.clone();
        let step = step.clone();
        tasks.push(tokio::spawn(async move {
            call(&app, "POST", &step, Some(json!({ "set": atom }))).await
        }));
    }
    for t in tasks {
        assert_eq!(t.await.unwrap().0, StatusCode::OK);
    }
    let (_, state) = call(&app, "GET", &format!("/sessions/{sid}"), None).await;
    assert_eq!(state["cr"], json!({ "l": 1, "st": 1, "m": 1, "mm": 1 }));
    assert_eq!(state["remaining"], 2);
}
