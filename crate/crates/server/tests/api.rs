use std::io::{Read, Write};
use std::net::TcpListener;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use schemaforge_core::document::{parse_json, serialize_json};
use schemaforge_core::gateway::{ApiKey, ChatRequest, GatewayConfig, GatewayError, LiveTransport, Transport};
use schemaforge_core::schema::validate_schema;
use schemaforge_core::session::{
    PromptSettings, EXAMPLE_INPUT, EXAMPLE_MAPPING, EXAMPLE_OUTPUT, EXAMPLE_TARGET_SCHEMA,
};
use schemaforge_server::openapi::{openapi, request_schema, REQUEST_SCHEMAS, ROUTES};
use schemaforge_server::store::ProjectStore;
use schemaforge_server::{router, AppState};
use serde_json::{json, Value};
use tower::ServiceExt;

const SECRET: &str = "sk-test-DO-NOT-LEAK-4242";

/// Answers by looking at the last user message.
struct Scripted(fn(&str) -> Result<String, GatewayError>);

impl Transport for Scripted {
    fn send(&self, req: &ChatRequest) -> Result<String, GatewayError> {
        (self.0)(&req.messages.last().unwrap().content)
    }
}

fn script(last: &str) -> Result<String, GatewayError> {
    if last.contains("FAIL") {
        Err(GatewayError::Auth { status: 401 })
    } else if last.contains("Input document") {
        Ok(format!("```jsonata\n{}\n```", EXAMPLE_MAPPING.trim()))
    } else if last.contains("typo please") {
        Ok("```json\n{\"type\":\"strng\"}\n```".into())
    } else if last.contains("question") {
        Ok("It has no required properties.".into())
    } else {
        Ok("{\"type\":\"object\",\"properties\":{\"name\":{\"type\":\"string\"}}}".into())
    }
}

fn app_with(dir: &std::path::Path, transport: Arc<dyn Transport>, gateway: GatewayConfig) -> Router {
    router(Arc::new(AppState {
        store: ProjectStore::open(dir).unwrap(),
        gateway,
        transport,
        settings: PromptSettings::default(),
        clock: Arc::new(|| 1_700_000_000_000),
    }))
}

fn gateway() -> GatewayConfig {
    GatewayConfig {
        api_key: Some(ApiKey::new(SECRET)),
        max_retries: 0,
        ..GatewayConfig::default()
    }
}

fn app(dir: &std::path::Path) -> Router {
    app_with(dir, Arc::new(Scripted(script)), gateway())
}

async fn call_raw(app: &Router, method: &str, uri: &str, body: &str) -> (StatusCode, String) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let text = String::from_utf8(bytes.to_vec()).unwrap();
    assert!(!text.contains(SECRET), "{method} {uri} leaked the key");
    (status, text)
}

async fn call(app: &Router, method: &str, uri: &str, body: Value) -> (StatusCode, Value) {
    let body = if body.is_null() { String::new() } else { body.to_string() };
    let (status, text) = call_raw(app, method, uri, &body).await;
    let value = if text.is_empty() { Value::Null } else { serde_json::from_str(&text).unwrap_or(Value::String(text)) };
    (status, value)
}

#[tokio::test]
async fn evaluate_reproduces_example_output() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let body = format!(
        r#"{{"source":{},"document":{}}}"#,
        serde_json::to_string(EXAMPLE_MAPPING).unwrap(),
        EXAMPLE_INPUT
    );
    let (status, text) = call_raw(&app, "POST", "/mapping/evaluate", &body).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(text, serialize_json(&parse_json(EXAMPLE_OUTPUT).unwrap(), true));

    let (status, v) = call(&app, "POST", "/mapping/evaluate", json!({"source": "nothing_here", "document": {}})).await;
    assert_eq!((status, v), (StatusCode::NO_CONTENT, Value::Null));
    let (status, v) = call(&app, "POST", "/mapping/evaluate", json!({"source": "$nope(1)", "document": {}})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["report"]["valid"], false);
    let (status, v) = call(&app, "POST", "/mapping/evaluate", json!({"source": "1 / 0", "document": {}})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "evaluation");
}

#[tokio::test]
async fn validate_empty_source_is_invalid_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, v) = call(&app, "POST", "/mapping/validate", json!({"source": ""})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["valid"], false);
    let (status, v) = call(&app, "POST", "/mapping/validate", json!({"source": "a.b"})).await;
    assert_eq!((status, &v["valid"]), (StatusCode::OK, &json!(true)));
}

#[tokio::test]
async fn stateless_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, v) = call(&app, "POST", "/infer", json!({"document": {"product_purity": "yes"}})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        v,
        json!({"type":"object","properties":{"product_purity":{"type":"string"}},"required":["product_purity"]})
    );
    let rows: Vec<Value> = (0..200).map(|i| json!({"i": i})).collect();
    let (status, v) = call(
        &app,
        "POST",
        "/truncate",
        json!({"document": {"rows": rows}, "config": {"target_bytes": 100, "n_start": 8}}),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["final_n"], 8);
    assert_eq!(v["doc"]["rows"].as_array().unwrap().len(), 8);
    assert_eq!(v["budget_met"], true);
    let (status, v) = call(&app, "POST", "/truncate", json!({"document": 1, "config": {"n_min": 0}})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["report"]["valid"], false);
    let (status, _) = call(&app, "POST", "/truncate", json!({"document": 1, "config": {"n_min": 9, "n_start": 4}})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn request_bodies_are_checked() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, v) = call(&app, "POST", "/infer", json!({})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["status"], "error");
    assert_eq!(v["code"], 422);
    assert_eq!(v["report"]["violations"][0]["keyword"], "required");
    let (status, v) = call_raw(&app, "POST", "/infer", "{not json").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(v.contains("invalid_json"));
    let (status, _) = call(&app, "POST", "/projects", json!({"schema": {"type": "strng"}})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (_, p) = call(&app, "POST", "/projects", json!({})).await;
    let (status, v) = call(&app, "POST", &format!("/projects/{}/sessions", p["id"].as_str().unwrap()), json!({"kind": "bogus"})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["report"]["violations"][0]["keyword"], "enum");
}

#[tokio::test]
async fn project_lifecycle_and_persistence() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, p) = call(&app, "POST", "/projects", json!({"schema": {"type": "array"}})).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(p["id"], "p1");
    let (status, v) = call(&app, "GET", "/projects/p1", Value::Null).await;
    assert_eq!((status, &v), (StatusCode::OK, &p));
    assert_eq!(call(&app, "GET", "/projects/p9", Value::Null).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, "GET", "/projects/..%2Fx", Value::Null).await.0, StatusCode::NOT_FOUND);

    let (status, v) = call(&app, "PUT", "/projects/p1/schema", json!({"schema": {"type": "strng"}})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["report"]["valid"], false);
    assert_eq!(call(&app, "PUT", "/projects/p9/schema", json!({"schema": {}})).await.0, StatusCode::NOT_FOUND);

    let csv = "name,product_purity\nMOF-5,yes\nUiO-66,no\n";
    let (status, v) = call_raw(&app, "PUT", "/projects/p1/document?format=csv", csv).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    let v: Value = serde_json::from_str(&v).unwrap();
    assert_eq!(v["project"]["document"][1], json!({"name": "UiO-66", "product_purity": "no"}));
    assert_eq!(v["validation"]["valid"], true);
    let (status, v) = call_raw(&app, "PUT", "/projects/p1/document?format=yaml", "a: [1, 2]\nb: yes\n").await;
    assert_eq!(status, StatusCode::OK);
    assert!(v.contains(r#""b":"yes""#) || v.contains(r#""b": "yes""#));
    let (status, _) = call_raw(&app, "PUT", "/projects/p1/document?format=xml", "<r><a x=\"1\">t</a></r>").await;
    assert_eq!(status, StatusCode::OK);
    let (status, _) = call_raw(&app, "PUT", "/projects/p1/document?format=json", "{").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = call_raw(&app, "PUT", "/projects/p1/document?format=toml", "a = 1").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    // What was saved is what the API reports.
    let (_, served) = call(&app, "GET", "/projects/p1", Value::Null).await;
    let stored = ProjectStore::open(dir.path()).unwrap().load("p1").unwrap();
    assert_eq!(serde_json::to_value(&stored).unwrap(), served);
    let (_, p2) = call(&app, "POST", "/projects", json!({})).await;
    assert_eq!(p2["id"], "p2");
}

#[tokio::test]
async fn session_gate_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    call(&app, "POST", "/projects", json!({"schema": {"type": "object", "properties": {"a": {"type": "string"}}}})).await;
    let (status, s) = call(
        &app,
        "POST",
        "/projects/p1/sessions",
        json!({"kind": "schema_modify", "inputs": {"description": "typo please", "context_path": ["properties", "a"]}}),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED, "{s}");
    assert_eq!(s["id"], "p1_s1");
    assert_eq!(s["can_apply"], false);
    assert_eq!(s["state"]["phase"], "proposed");
    assert_eq!(s["state"]["history"][0]["raw_response"], "```json\n{\"type\":\"strng\"}\n```");

    let (status, v) = call(&app, "POST", "/sessions/p1_s1/apply", Value::Null).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["error"], "apply_blocked");
    assert!(v["message"].as_str().unwrap().contains("not passed validation"));

    let (status, v) = call(&app, "POST", "/sessions/p1_s1/edit", json!({"proposal": "{\"type\":\"integer\"}"})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["session"]["can_apply"], true);
    let (status, v) = call(&app, "POST", "/sessions/p1_s1/apply", json!({})).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["applied"]["type"], "schema");
    let (_, p) = call(&app, "GET", "/projects/p1", Value::Null).await;
    assert_eq!(p["schema"]["properties"]["a"], json!({"type": "integer"}));

    let (status, v) = call(&app, "POST", "/sessions/p1_s1/discard", Value::Null).await;
    assert_eq!((status, v["error"].as_str()), (StatusCode::CONFLICT, Some("illegal_transition")));
    let (status, v) = call(&app, "POST", "/sessions/p1_s1/edit", json!({"proposal": "{}"})).await;
    assert_eq!((status, v["error"].as_str()), (StatusCode::CONFLICT, Some("illegal_transition")));

    // Follow-up keeps the context path and carries the previous proposal.
    let (status, v) = call(&app, "POST", "/sessions/p1_s1/submit", json!({"inputs": {"description": "again"}})).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    let sent = &v["session"]["state"]["history"][1]["bundle"]["messages"];
    assert_eq!(sent[1]["role"], "assistant");
    assert_eq!(v["session"]["state"]["context_path"], json!(["properties", "a"]));
    let (status, v) = call(&app, "POST", "/sessions/p1_s1/discard", json!({})).await;
    assert_eq!((status, &v["session"]["state"]["phase"]), (StatusCode::OK, &json!("discarded")));
    assert_eq!(v["session"]["state"]["proposal"], Value::Null);

    let (status, v) = call(&app, "GET", "/sessions/p1_s1", Value::Null).await;
    assert_eq!((status, &v["state"]["phase"]), (StatusCode::OK, &json!("discarded")));
    assert_eq!(call(&app, "GET", "/sessions/p1_s7", Value::Null).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, "POST", "/sessions/nonsense/apply", Value::Null).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, "POST", "/sessions/p8_s1/apply", Value::Null).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn queries_cannot_be_applied() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    call(&app, "POST", "/projects", json!({})).await;
    let (status, s) = call(&app, "POST", "/projects/p1/sessions", json!({"kind": "schema_query", "inputs": {"description": "question"}})).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(s["state"]["proposal"], "It has no required properties.");
    assert_eq!(s["state"]["validation"]["type"], "skipped");
    let (status, v) = call(&app, "POST", "/sessions/p1_s1/apply", Value::Null).await;
    assert_eq!((status, v["error"].as_str()), (StatusCode::CONFLICT, Some("not_applicable")));
}

#[tokio::test]
async fn mapping_session_transforms_project_document() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let body = format!(r#"{{"schema":{},"document":{}}}"#, EXAMPLE_TARGET_SCHEMA, EXAMPLE_INPUT);
    assert_eq!(call_raw(&app, "POST", "/projects", &body).await.0, StatusCode::CREATED);
    let (status, s) = call(&app, "POST", "/projects/p1/sessions", json!({"kind": "mapping_generate"})).await;
    assert_eq!(status, StatusCode::CREATED, "{s}");
    assert_eq!(s["state"]["proposal"], EXAMPLE_MAPPING.trim());
    assert_eq!(s["can_apply"], true);
    let (status, v) = call(&app, "POST", "/sessions/p1_s1/apply", Value::Null).await;
    assert_eq!(status, StatusCode::OK);
    let expected: Value = serde_json::from_str(EXAMPLE_OUTPUT).unwrap();
    assert_eq!(v["applied"]["value"], expected);
    let (_, p) = call(&app, "GET", "/projects/p1", Value::Null).await;
    assert_eq!(p["document"], expected);
}

#[tokio::test]
async fn gateway_failure_is_502_and_saves_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    call(&app, "POST", "/projects", json!({})).await;
    let (status, v) = call(&app, "POST", "/projects/p1/sessions", json!({"kind": "schema_create", "inputs": {"description": "FAIL"}})).await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert_eq!(v["error"], "gateway");
    let (_, p) = call(&app, "GET", "/projects/p1", Value::Null).await;
    assert_eq!(p["sessions"], json!([]));
}

/// An endpoint that puts the Authorization header it received into an
/// error body.
fn echo_auth_server() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            stream.set_read_timeout(Some(Duration::from_secs(2))).ok();
            let mut buf = vec![0u8; 64 * 1024];
            let mut got = Vec::new();
            while let Ok(n) = stream.read(&mut buf) {
                if n == 0 {
                    break;
                }
                got.extend_from_slice(&buf[..n]);
                let text = String::from_utf8_lossy(&got);
                if let Some(end) = text.find("\r\n\r\n") {
                    let len = text
                        .lines()
                        .find_map(|l| l.to_ascii_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse::<usize>().unwrap()))
                        .unwrap_or(0);
                    if got.len() >= end + 4 + len {
                        break;
                    }
                }
            }
            let text = String::from_utf8_lossy(&got).to_string();
            let auth = text
                .lines()
                .find(|l| l.to_ascii_lowercase().starts_with("authorization:"))
                .unwrap_or("")
                .to_string();
            let body = format!("{{\"error\":\"server exploded; you sent {auth}\"}}");
            let resp = format!(
                "HTTP/1.1 500 Internal Server Error\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(resp.as_bytes()).ok();
        }
    });
    format!("http://{addr}")
}

#[tokio::test]
async fn api_key_never_leaves_the_server() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = GatewayConfig {
        base_url: echo_auth_server(),
        timeout: Duration::from_secs(5),
        ..gateway()
    };
    let live = LiveTransport::new(&cfg).unwrap();
    let app = app_with(dir.path(), Arc::new(live), cfg);
    call(&app, "POST", "/projects", json!({})).await;
    // `call_raw` asserts the key is absent from every body.
    let (status, v) = call(&app, "POST", "/projects/p1/sessions", json!({"kind": "schema_create", "inputs": {"description": "x"}})).await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert!(v["message"].as_str().unwrap().contains("[redacted]"), "{v}");
    for (method, path, _, _, _) in ROUTES {
        let path = path.replace("{id}", "p1").replace("{sid}", "p1_s1");
        call(&app, &method.to_ascii_uppercase(), &path, Value::Null).await;
    }
    let files: String = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| std::fs::read_to_string(e.unwrap().path()).unwrap())
        .collect();
    assert!(!files.contains(SECRET));
}

#[tokio::test]
async fn openapi_lists_every_route_and_schema() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, v) = call(&app, "GET", "/openapi.json", Value::Null).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v, openapi());
    for (method, path, _, _, _) in ROUTES {
        assert!(v["paths"][path][method].is_object(), "{method} {path}");
    }
    for name in REQUEST_SCHEMAS {
        let node = schemaforge_core::document::DataNode::try_from(request_schema(name)).unwrap();
        assert!(validate_schema(&node).valid, "{name}");
    }
    let (status, html) = call_raw(&app, "GET", "/", "").await;
    assert_eq!(status, StatusCode::OK);
    assert!(html.contains("/openapi.json"));
}

async fn scripted_run(dir: &std::path::Path) -> Vec<String> {
    let app = app(dir);
    let mut bodies = Vec::new();
    let body = format!(r#"{{"schema":{},"document":{}}}"#, EXAMPLE_TARGET_SCHEMA, EXAMPLE_INPUT);
    bodies.push(call_raw(&app, "POST", "/projects", &body).await.1);
    bodies.push(call_raw(&app, "POST", "/projects/p1/sessions", r#"{"kind":"schema_create","inputs":{"description":"d"}}"#).await.1);
    bodies.push(call_raw(&app, "POST", "/projects/p1/sessions", r#"{"kind":"mapping_generate"}"#).await.1);
    bodies.push(call_raw(&app, "POST", "/sessions/p1_s2/apply", "").await.1);
    bodies.push(call_raw(&app, "POST", "/sessions/p1_s1/edit", r#"{"proposal":"{}"}"#).await.1);
    bodies.push(call_raw(&app, "GET", "/projects/p1", "").await.1);
    bodies
}

#[tokio::test]
async fn identical_request_sequences_give_identical_bodies() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = scripted_run(a.path()).await;
    let second = scripted_run(b.path()).await;
    assert_eq!(first, second);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_edits_are_serialized() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    call(&app, "POST", "/projects", json!({})).await;
    call(&app, "POST", "/projects/p1/sessions", json!({"kind": "schema_create", "inputs": {"description": "d"}})).await;
    let mut tasks = Vec::new();
    for i in 0..24 {
        let app = app.clone();
        tasks.push(tokio::spawn(async move {
            let body = json!({"proposal": format!("{{\"title\":\"v{i}\"}}")});
            call(&app, "POST", "/sessions/p1_s1/edit", body).await.0
        }));
    }
    for t in tasks {
        assert_eq!(t.await.unwrap(), StatusCode::OK);
    }
    // Concurrent project creation still hands out distinct ids.
    let mut tasks = Vec::new();
    for _ in 0..10 {
        let app = app.clone();
        tasks.push(tokio::spawn(async move { call(&app, "POST", "/projects", json!({})).await.1["id"].clone() }));
    }
    let mut ids = Vec::new();
    for t in tasks {
        ids.push(t.await.unwrap());
    }
    ids.sort_by_key(|v| v.to_string());
    ids.dedup();
    assert_eq!(ids.len(), 10);
    let (_, p) = call(&app, "GET", "/projects/p1", Value::Null).await;
    assert_eq!(p["sessions"][0]["state"]["phase"], "user_editing");
}
