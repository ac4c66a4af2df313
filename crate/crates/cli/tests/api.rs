use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use secweave_cli::server::{codes, router, AppState};
use secweave_core::corpus;
use secweave_core::testgen::TestPurpose;
use secweave_core::text::{parse_model, parse_purposes, parse_testcase};

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, v)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    call(app, Method::GET, uri, None).await
}

async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    call(app, Method::POST, uri, Some(body)).await
}

fn app() -> (Arc<AppState>, Router) {
    let st = Arc::new(AppState::new());
    (st.clone(), router(st))
}

fn assert_error(v: &Value, code: &str) {
    assert_eq!(v["code"], code, "{v}");
    assert!(v["message"].as_str().is_some_and(|m| !m.is_empty()), "{v}");
    assert!(codes::ALL.contains(&code));
}

async fn upload(app: &Router, source: &str) -> String {
    let (s, v) = post(app, "/models", json!({ "source": source })).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    v["id"].as_str().unwrap().to_string()
}

async fn drp_secured(app: &Router) -> (String, Value) {
    let id = upload(app, corpus::DRP_INITIAL).await;
    let (s, v) = post(
        app,
        &format!("/models/{id}/weave"),
        json!({ "policy": corpus::DRP_POLICY, "config": corpus::DRP_WEAVE }),
    )
    .await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    (v["model"]["id"].as_str().unwrap().to_string(), v)
}

#[tokio::test]
async fn upload_list_and_fetch_models() {
    let (_, app) = app();
    let (s, v) = get(&app, "/models").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v, json!([]));

    let (s, v) = post(&app, "/models", json!({ "source": corpus::V2I, "name": "vehicle" })).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(v["name"], "vehicle");
    assert_eq!(v["parent"], Value::Null);
    let id = v["id"].as_str().unwrap().to_string();
    let (_, list) = get(&app, "/models").await;
    assert_eq!(list.as_array().unwrap().len(), 1);
    assert_eq!(list[0]["id"], id.as_str());

    let (s, d) = get(&app, &format!("/models/{id}")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(d["source"], corpus::V2I);
    let m = parse_model(corpus::V2I).unwrap();
    assert_eq!(d["stats"]["states"], m.states.len());
    let nodes = d["graph"]["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), m.states.len());
    let initial: Vec<&Value> = nodes.iter().filter(|n| n["initial"] == true).collect();
    assert_eq!(initial.len(), 1);
    assert_eq!(initial[0]["id"], "off_line");
    assert_eq!(initial[0]["layer"], 0);
    let edges = d["graph"]["edges"].as_array().unwrap();
    assert_eq!(edges.len(), m.transitions.len());
    for e in edges {
        let t = m.transition(e["id"].as_str().unwrap()).unwrap();
        assert_eq!(e["source"], t.source.as_str());
        assert_eq!(e["target"], t.target.as_str());
        assert_eq!(e["input"], t.input.signal.as_str());
    }
    // Layers follow breadth-first distance.
    for e in edges {
        let layer = |s: &Value| nodes.iter().find(|n| n["id"] == *s).unwrap()["layer"].as_u64().unwrap();
        assert!(layer(&e["target"]) <= layer(&e["source"]) + 1, "{e}");
    }
}

#[tokio::test]
async fn upload_errors_carry_codes_and_locations() {
    let (_, app) = app();
    let (s, v) = post(&app, "/models", json!({ "source": "system ;" })).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&v, codes::SYNTAX_ERROR);
    assert!(v["location"].is_object(), "{v}");

    let bad = corpus::DRP_INITIAL.replacen("nextstate S2", "nextstate S9", 1);
    let (s, v) = post(&app, "/models", json!({ "source": bad })).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&v, codes::RESOLUTION_ERROR);

    let (s, v) = post(&app, "/models", json!({ "src": "x" })).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_error(&v, codes::BAD_REQUEST);

    let (s, v) = get(&app, "/models/m404").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_error(&v, codes::NOT_FOUND);
    let (s, v) = get(&app, "/nowhere").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_error(&v, codes::NOT_FOUND);
}

#[tokio::test]
async fn weave_creates_a_child_model() {
    let (_, app) = app();
    let (id, v) = drp_secured(&app).await;
    assert!(v["report_text"].as_str().unwrap().contains("3/3/6 → 3/5/8"), "{v}");
    assert_eq!(v["report"]["before"]["transitions"], 3);
    assert_eq!(v["report"]["after"]["transitions"], 5);
    assert_eq!(v["model"]["stats"]["signals"], 8);
    assert!(v["model"]["parent"].is_string());

    let (_, d) = get(&app, &format!("/models/{id}")).await;
    let (expected, _) = corpus::drp_secured();
    assert_eq!(parse_model(d["source"].as_str().unwrap()).unwrap(), expected);
    assert!(d["report"].is_object());
    let guarded = d["graph"]["edges"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["predicate"].is_string())
        .count();
    assert!(guarded >= 4, "{d}");

    let base = v["model"]["parent"].as_str().unwrap();
    let (s, e) = post(&app, &format!("/models/{base}/weave"), json!({ "policy": "<Policy/>" })).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&e, codes::POLICY_ERROR);
    let (s, e) = post(
        &app,
        &format!("/models/{base}/weave"),
        json!({ "policy": corpus::DRP_POLICY, "config": "emit_observations = true\n" }),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&e, codes::WEAVE_ERROR);
    let (s, e) = post(
        &app,
        &format!("/models/{base}/weave"),
        json!({ "policy": corpus::DRP_POLICY, "config": "observe nosuch -> x stay\n" }),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&e, codes::RESOLUTION_ERROR);
}

#[tokio::test]
async fn session_step_undo_reset_and_testcase() {
    let (_, app) = app();
    let id = upload(&app, corpus::V2I).await;
    let (s, v) = post(&app, &format!("/models/{id}/sessions"), json!({})).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    let sid = v["id"].as_str().unwrap().to_string();
    assert_eq!(v["model"], id.as_str());
    assert_eq!(v["state"], "off_line");
    assert_eq!(v["steps"], 0);
    assert_eq!(v["choices"].as_array().unwrap().len(), 3);

    let (s, v) = post(&app, &format!("/sessions/{sid}/step"), json!({ "index": 1 })).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["state"], "wait");
    let (_, v) = post(&app, &format!("/sessions/{sid}/step"), json!({ "index": 1 })).await;
    assert_eq!(v["state"], "wait_certificate");
    assert!(v["render"].as_str().unwrap().starts_with("status: 2 steps"), "{v}");
    assert_eq!(v["trace"].as_array().unwrap().len(), 2);

    let (s, e) = post(&app, &format!("/sessions/{sid}/step"), json!({ "index": 9 })).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&e, codes::INVALID_CHOICE);
    let (s, e) = post(&app, &format!("/sessions/{sid}/step"), json!({ "index": "one" })).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_error(&e, codes::BAD_REQUEST);

    let (s, tc) = get(&app, &format!("/sessions/{sid}/testcase")).await;
    assert_eq!(s, StatusCode::OK);
    let text = tc["text"].as_str().unwrap();
    assert_eq!(text.lines().count(), 2);
    assert_eq!(parse_testcase(text).unwrap().steps.len(), 2);
    assert_eq!(tc["testcase"]["steps"].as_array().unwrap().len(), 2);

    let (s, v) = post(&app, &format!("/sessions/{sid}/undo"), json!({})).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["state"], "wait");
    let (_, v) = get(&app, &format!("/sessions/{sid}")).await;
    assert_eq!(v["steps"], 1);
    let (_, v) = post(&app, &format!("/sessions/{sid}/reset"), json!({})).await;
    assert_eq!(v["steps"], 0);
    let (s, e) = post(&app, &format!("/sessions/{sid}/undo"), json!({})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&e, codes::NOTHING_TO_UNDO);

    let (s, e) = get(&app, "/sessions/s999").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_error(&e, codes::NOT_FOUND);
    let (s, _) = post(&app, "/models/m999/sessions", json!({})).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

// The guard is held across the request on purpose.
#[allow(clippy::await_holding_lock)]
#[tokio::test]
async fn busy_sessions_answer_409() {
    let (st, app) = app();
    let id = upload(&app, corpus::V2I).await;
    let (_, v) = post(&app, &format!("/models/{id}/sessions"), json!({})).await;
    let sid = v["id"].as_str().unwrap().to_string();
    let slot = st.session(&sid).unwrap();
    {
        let _held = slot.session.write().unwrap();
        let (s, e) = post(&app, &format!("/sessions/{sid}/step"), json!({ "index": 1 })).await;
        assert_eq!(s, StatusCode::CONFLICT);
        assert_error(&e, codes::SESSION_BUSY);
        let (s, _) = post(&app, &format!("/sessions/{sid}/undo"), json!({})).await;
        assert_eq!(s, StatusCode::CONFLICT);
    }
    let (s, v) = post(&app, &format!("/sessions/{sid}/step"), json!({ "index": 1 })).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["steps"], 1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_steps_keep_the_session_consistent() {
    let (st, app) = app();
    let id = upload(&app, corpus::V2I).await;
    let (_, v) = post(&app, &format!("/models/{id}/sessions"), json!({})).await;
    let sid = v["id"].as_str().unwrap().to_string();
    // From off_line choice 3 loops back to off_line, so every step is valid.
    let mut handles = Vec::new();
    for _ in 0..64 {
        let app = app.clone();
        let uri = format!("/sessions/{sid}/step");
        handles.push(tokio::spawn(async move { post(&app, &uri, json!({ "index": 3 })).await.0 }));
    }
    let mut ok = 0;
    for h in handles {
        match h.await.unwrap() {
            StatusCode::OK => ok += 1,
            StatusCode::CONFLICT => {}
            s => panic!("unexpected {s}"),
        }
    }
    assert!(ok >= 1);
    {
        let slot = st.session(&sid).unwrap();
        let s = slot.session.read().unwrap();
        assert_eq!(s.step_count(), ok);
        assert_eq!(s.current().state, "off_line");
    }
    let (_, v) = get(&app, &format!("/sessions/{sid}")).await;
    assert_eq!(v["steps"], ok);
}

#[tokio::test]
async fn objectives_endpoint() {
    let (_, app) = app();
    let id = upload(&app, corpus::V2I).await;
    let (s, v) = post(
        &app,
        &format!("/models/{id}/objectives"),
        json!({ "state": "wait_certificate", "input": "response", "param": "certificate" }),
    )
    .await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let m = parse_model(corpus::V2I).unwrap();
    let expected = parse_purposes(corpus::V2I_OBJECTIVES, &m).unwrap();
    let got: Vec<TestPurpose> = serde_json::from_value(v["purposes"].clone()).unwrap();
    assert_eq!(got.len(), 3);
    for (g, e) in got.iter().zip(&expected) {
        assert_eq!((&g.source, &g.destination, &g.input, &g.output), (&e.source, &e.destination, &e.input, &e.output));
    }
    assert_eq!(parse_purposes(v["text"].as_str().unwrap(), &m).unwrap(), got);
    assert_eq!(v["warnings"], json!([]));

    let (s, e) = post(
        &app,
        &format!("/models/{id}/objectives"),
        json!({ "state": "nowhere", "input": "response", "param": "certificate" }),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&e, codes::OBJECTIVE_ERROR);

    let nd = "system N; type Two = enum a, b endenum; signal go(x: Two); signal o(); process p(1); \
              state A init; input go(x) output o() nextstate A; input go(x) output o() nextstate B; endstate; \
              state B; endstate; endprocess; endsystem;";
    let nid = upload(&app, nd).await;
    let (s, e) = post(&app, &format!("/models/{nid}/objectives"), json!({ "state": "A", "input": "go", "param": "x" })).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&e, codes::NONDETERMINISTIC);
}

#[tokio::test]
async fn testgen_endpoint() {
    let (_, app) = app();
    let (id, _) = drp_secured(&app).await;
    let (s, v) = post(
        &app,
        &format!("/models/{id}/testgen"),
        json!({ "purposes": corpus::DRP_RULE3, "params": { "rng_seed": 3 } }),
    )
    .await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["report"]["hits"], 2);
    let text = v["text"].as_str().unwrap();
    let tc = parse_testcase(text).unwrap();
    assert_eq!(v["testcase"]["hits"].as_array().unwrap().len(), 2);
    assert_eq!(v["testcase"]["steps"].as_array().unwrap().len(), tc.steps.len());

    // Structured purposes give the same answer as text.
    let (m, _) = corpus::drp_secured();
    let list = parse_purposes(corpus::DRP_RULE3, &m).unwrap();
    let (_, w) = post(
        &app,
        &format!("/models/{id}/testgen"),
        json!({ "purposes": list, "params": { "rng_seed": 3 } }),
    )
    .await;
    assert_eq!(w["text"], v["text"]);

    let (s, e) = post(&app, &format!("/models/{id}/testgen"), json!({ "purposes": [] })).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&e, codes::INVALID_PARAMS);
    let (s, e) = post(
        &app,
        &format!("/models/{id}/testgen"),
        json!({ "purposes": corpus::DRP_RULE1, "params": { "depth_limit": 0 } }),
    )
    .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&e, codes::INVALID_PARAMS);
    let (s, e) = post(&app, &format!("/models/{id}/testgen"), json!({ "purposes": "purpose x\n  cond4 = action: input nosuch\nend\n" })).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&e, codes::RESOLUTION_ERROR);

    let chain = "system C; signal a(); signal b(); signal c(); process p(1); \
                 state A init; input a() output a() nextstate B; endstate; \
                 state B; input b() output b() nextstate C; endstate; \
                 state C; endstate; endprocess; endsystem;";
    let cid = upload(&app, chain).await;
    let (s, e) = post(&app, &format!("/models/{cid}/testgen"), json!({ "purposes": "purpose never\n  cond4 = action: input c\nend\n" })).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_error(&e, codes::GENERATION_EXHAUSTED);
}

#[tokio::test]
async fn api_and_cli_test_cases_are_byte_identical() {
    let (_, app) = app();
    let (id, _) = drp_secured(&app).await;
    let (_, v) = post(
        &app,
        &format!("/models/{id}/testgen"),
        json!({ "purposes": corpus::DRP_RULE1_FULL, "params": { "rng_seed": 11, "depth_limit": 6 } }),
    )
    .await;
    let api_text = v["text"].as_str().unwrap().to_string();

    let dir = tempfile::tempdir().unwrap();
    let corpus_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let woven = dir.path().join("w.mdl");
    let tc = dir.path().join("w.tc");
    let bin = env!("CARGO_BIN_EXE_secweave");
    let st = Command::new(bin)
        .arg("weave")
        .arg(corpus_dir.join("drp_initial.mdl"))
        .arg("--policy")
        .arg(corpus_dir.join("drp_policy.xml"))
        .arg("--config")
        .arg(corpus_dir.join("drp.weave"))
        .arg("-o")
        .arg(&woven)
        .status()
        .unwrap();
    assert!(st.success());
    let st = Command::new(bin)
        .arg("testgen")
        .arg(&woven)
        .arg("--purposes")
        .arg(corpus_dir.join("drp_rule1_full.purposes"))
        .args(["--seed", "11", "--depth", "6", "-o"])
        .arg(&tc)
        .status()
        .unwrap();
    assert!(st.success());
    assert_eq!(fs::read_to_string(&tc).unwrap(), api_text);
}

#[tokio::test]
async fn store_directory_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let (base, child) = {
        let app = router(Arc::new(AppState::with_store(dir.path()).unwrap()));
        let (child, v) = drp_secured(&app).await;
        (v["model"]["parent"].as_str().unwrap().to_string(), child)
    };
    let app = router(Arc::new(AppState::with_store(dir.path()).unwrap()));
    let (_, list) = get(&app, "/models").await;
    assert_eq!(list.as_array().unwrap().len(), 2, "{list}");
    let (s, d) = get(&app, &format!("/models/{child}")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(d["parent"], base.as_str());
    assert!(d["report"].is_object());
    // New handles do not collide with reloaded ones.
    let fresh = upload(&app, corpus::V2I).await;
    assert_ne!(fresh, base);
    assert_ne!(fresh, child);
}

#[tokio::test]
async fn cors_is_permissive() {
    let (_, app) = app();
    let req = Request::builder()
        .method(Method::OPTIONS)
        .uri("/models")
        .header("origin", "http://localhost:5173")
        .header("access-control-request-method", "POST")
        .body(Body::empty())
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert!(resp.status().is_success());
    assert_eq!(resp.headers()["access-control-allow-origin"], "*");
}
