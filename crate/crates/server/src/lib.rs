//! HTTP facade over schemaforge: projects with file persistence,
//! assistance sessions and stateless document/mapping operations.
//!
//! Mutations of one project (including every session step) are serialized
//! behind a per-project lock. Reads load the last saved file, which is
//! always complete thanks to write-then-rename.

mod error;
pub mod openapi;
pub mod store;

use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use schemaforge_core::document::{from_csv, from_xml, from_yaml, parse_json, CsvOptions, DataNode};
use schemaforge_core::gateway::{GatewayConfig, Transport};
use schemaforge_core::infer::{infer_schema, InferenceOptions};
use schemaforge_core::mapping::{evaluate_mapping, parse_mapping, validate_syntax};
use schemaforge_core::schema::{validate_instance, validate_schema, SchemaNode};
use schemaforge_core::session::{
    build_prompt_with, Applied, ApplyTarget, PromptInputs, PromptKind, PromptSettings,
    SessionState,
};
use schemaforge_core::truncate::{truncate_document, TruncationConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use crate::error::ApiError;
use crate::store::{project_of_session, Project, ProjectStore, StoredSession};

pub const DEFAULT_PORT: u16 = 8817;
const BODY_LIMIT: usize = 64 * 1024 * 1024;
const INDEX_HTML: &str = include_str!("../assets/index.html");

/// Milliseconds since the Unix epoch; injectable so tests are repeatable.
pub type Clock = Arc<dyn Fn() -> u64 + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0)
    })
}

pub struct AppState {
    pub store: ProjectStore,
    pub gateway: GatewayConfig,
    pub transport: Arc<dyn Transport>,
    pub settings: PromptSettings,
    pub clock: Clock,
}

type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/", get(index))
        .route("/openapi.json", get(openapi_json))
        .route("/projects", post(create_project))
        .route("/projects/{id}", get(get_project))
        .route("/projects/{id}/schema", put(put_schema))
        .route("/projects/{id}/document", put(put_document))
        .route("/projects/{id}/sessions", post(create_session))
        .route("/sessions/{sid}", get(get_session))
        .route("/sessions/{sid}/submit", post(submit_session))
        .route("/sessions/{sid}/edit", post(edit_session))
        .route("/sessions/{sid}/apply", post(apply_session))
        .route("/sessions/{sid}/discard", post(discard_session))
        .route("/infer", post(infer))
        .route("/truncate", post(truncate))
        .route("/mapping/validate", post(mapping_validate))
        .route("/mapping/evaluate", post(mapping_evaluate))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

/// Serves until Ctrl-C.
pub async fn serve(listener: tokio::net::TcpListener, state: Shared) -> std::io::Result<()> {
    tracing::info!(addr = ?listener.local_addr().ok(), "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Parses a JSON body and checks it against its published request schema
/// before deserializing.
fn checked<T: DeserializeOwned>(body: &[u8], schema: &str) -> Result<T, ApiError> {
    let text = std::str::from_utf8(body)
        .map_err(|_| ApiError::unprocessable("invalid_json", "request body is not UTF-8"))?;
    let text = if text.trim().is_empty() { "{}" } else { text };
    let node = parse_json(text).map_err(|e| ApiError::unprocessable("invalid_json", e.to_string()))?;
    let request_schema = DataNode::try_from(openapi::request_schema(schema))
        .map(SchemaNode::new)
        .map_err(|e| ApiError::internal(e.to_string()))?;
    let report = validate_instance(&node, &request_schema).map_err(|e| ApiError::internal(e.to_string()))?;
    if !report.valid {
        return Err(ApiError::unprocessable(
            "invalid_request",
            format!("request body does not match the {schema} schema"),
        )
        .with_report(report));
    }
    serde_json::from_str(text).map_err(|e| ApiError::unprocessable("invalid_request", e.to_string()))
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

async fn index() -> Html<&'static str> {
    Html(INDEX_HTML)
}

async fn openapi_json() -> Json<Value> {
    Json(openapi::openapi())
}

#[derive(Deserialize)]
struct CreateProject {
    #[serde(default)]
    schema: Option<SchemaNode>,
    #[serde(default)]
    document: Option<DataNode>,
}

async fn create_project(State(st): State<Shared>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateProject = checked(&body, "CreateProject")?;
    let schema = req.schema.unwrap_or_else(SchemaNode::any);
    let report = validate_schema(schema.as_node());
    if !report.valid {
        return Err(ApiError::unprocessable("invalid_schema", "schema is not valid").with_report(report));
    }
    let document = req.document.unwrap_or_else(DataNode::empty_object);
    let project = blocking(move || Ok(st.store.create(schema, document, (st.clock)())?)).await?;
    Ok((StatusCode::CREATED, Json(project)).into_response())
}

async fn get_project(State(st): State<Shared>, Path(id): Path<String>) -> Result<Json<Project>, ApiError> {
    Ok(Json(st.store.load(&id)?))
}

/// Loads, changes and saves one project while holding its lock. Nothing is
/// saved when `f` fails.
async fn mutate<T: Send + 'static>(
    st: Shared,
    id: String,
    f: impl FnOnce(&AppState, &mut Project) -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    let lock = st.store.lock(&id);
    let _guard = lock.lock().await;
    blocking(move || {
        let mut project = st.store.load(&id)?;
        let out = f(&st, &mut project)?;
        project.modified = (st.clock)();
        st.store.save(&project)?;
        Ok(out)
    })
    .await
}

#[derive(Deserialize)]
struct PutSchema {
    schema: SchemaNode,
}

async fn put_schema(
    State(st): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let req: PutSchema = checked(&body, "PutSchema")?;
    let report = validate_schema(req.schema.as_node());
    if !report.valid {
        // Unknown ids are still 404, not 422.
        st.store.load(&id)?;
        return Err(ApiError::unprocessable("invalid_schema", "schema is not valid").with_report(report));
    }
    let project = mutate(st, id, move |_, p| {
        p.schema = req.schema;
        Ok(p.clone())
    })
    .await?;
    Ok(Json(json!({"project": project, "validation": report})))
}

#[derive(Deserialize)]
struct FormatQuery {
    format: Option<String>,
}

fn read_document(text: &str, format: &str) -> Result<DataNode, ApiError> {
    let bad = |e: String| ApiError::unprocessable("invalid_document", e);
    match format {
        "json" => parse_json(text).map_err(|e| bad(e.to_string())),
        "yaml" | "yml" => from_yaml(text).map_err(|e| bad(e.to_string())),
        "xml" => from_xml(text).map_err(|e| bad(e.to_string())),
        "csv" => from_csv(text, CsvOptions::default()).map_err(|e| bad(e.to_string())),
        other => Err(ApiError::unprocessable(
            "invalid_request",
            format!("unknown format `{other}`; expected json, yaml, xml or csv"),
        )),
    }
}

async fn put_document(
    State(st): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<FormatQuery>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let text = String::from_utf8(body.to_vec())
        .map_err(|_| ApiError::unprocessable("invalid_document", "document is not UTF-8"))?;
    let format = q.format.unwrap_or_else(|| "json".into()).to_ascii_lowercase();
    let document = blocking(move || read_document(&text, &format)).await?;
    let (project, report) = mutate(st, id, move |_, p| {
        p.document = document;
        let report = validate_instance(&p.document, &p.schema)
            .map_err(|e| ApiError::unprocessable("invalid_schema", e.to_string()))?;
        Ok((p.clone(), report))
    })
    .await?;
    Ok(Json(json!({"project": project, "validation": report})))
}

#[derive(Serialize)]
struct SessionView<'a> {
    id: &'a str,
    project: &'a str,
    can_apply: bool,
    state: &'a SessionState,
}

fn session_json(project: &Project, sid: &str) -> Value {
    let s = project.session(sid).expect("session exists");
    serde_json::to_value(SessionView {
        id: &s.id,
        project: &project.id,
        can_apply: s.state.can_apply(),
        state: &s.state,
    })
    .expect("session serializes")
}

/// Fills inputs the request left out from the project itself.
fn fill_inputs(kind: PromptKind, mut inputs: PromptInputs, project: &Project) -> PromptInputs {
    use PromptKind::*;
    if inputs.schema.is_none() && matches!(kind, SchemaModify | SchemaQuery | DataCreate | DataModify) {
        inputs.schema = Some(project.schema.clone());
    }
    if inputs.context_path.is_none() && kind == SchemaModify {
        inputs.context_path = Some(Default::default());
    }
    if inputs.document.is_none() && matches!(kind, DataModify | DataQuery | MappingGenerate) {
        inputs.document = Some(project.document.clone());
    }
    if inputs.target_schema.is_none() && kind == MappingGenerate {
        inputs.target_schema = Some(project.schema.clone());
    }
    inputs
}

#[derive(Deserialize)]
struct CreateSession {
    kind: PromptKind,
    #[serde(default)]
    inputs: PromptInputs,
}

async fn create_session(
    State(st): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: CreateSession = checked(&body, "CreateSession")?;
    let view = mutate(st, id, move |st, p| {
        let inputs = fill_inputs(req.kind, req.inputs, p);
        let bundle = build_prompt_with(req.kind, &inputs, &st.settings)?;
        let mut session = SessionState::new(req.kind);
        session.submit(&bundle, &st.gateway, st.transport.as_ref())?;
        let sid = format!("{}_s{}", p.id, p.sessions.len() + 1);
        p.sessions.push(StoredSession {
            id: sid.clone(),
            state: session,
        });
        Ok(session_json(p, &sid))
    })
    .await?;
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

fn project_id(sid: &str) -> Result<String, ApiError> {
    project_of_session(sid)
        .map(str::to_string)
        .ok_or_else(|| ApiError::not_found(format!("no session `{sid}`")))
}

async fn get_session(State(st): State<Shared>, Path(sid): Path<String>) -> Result<Json<Value>, ApiError> {
    let project = st.store.load(&project_id(&sid)?)?;
    project
        .session(&sid)
        .ok_or_else(|| ApiError::not_found(format!("no session `{sid}`")))?;
    Ok(Json(session_json(&project, &sid)))
}

/// Runs one step on a copy of the session and writes it back on success.
async fn session_step(
    st: Shared,
    sid: String,
    f: impl FnOnce(&AppState, &mut Project, &mut SessionState) -> Result<Option<Value>, ApiError>
        + Send
        + 'static,
) -> Result<Json<Value>, ApiError> {
    let pid = project_id(&sid)?;
    mutate(st, pid, move |st, p| {
        let mut session = p
            .session(&sid)
            .ok_or_else(|| ApiError::not_found(format!("no session `{sid}`")))?
            .state
            .clone();
        let extra = f(st, p, &mut session)?;
        p.session_mut(&sid).expect("checked above").state = session;
        let mut out = json!({"session": session_json(p, &sid)});
        if let Some(extra) = extra {
            out["applied"] = extra;
        }
        Ok(Json(out))
    })
    .await
}

#[derive(Deserialize)]
struct Submit {
    #[serde(default)]
    inputs: PromptInputs,
}

async fn submit_session(
    State(st): State<Shared>,
    Path(sid): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let req: Submit = checked(&body, "Submit")?;
    session_step(st, sid, move |st, p, s| {
        let mut inputs = req.inputs;
        if inputs.context_path.is_none() {
            inputs.context_path = s.context_path.clone();
        }
        let inputs = fill_inputs(s.kind, inputs, p);
        let bundle = build_prompt_with(s.kind, &inputs, &st.settings)?;
        s.submit(&bundle, &st.gateway, st.transport.as_ref())?;
        Ok(None)
    })
    .await
}

#[derive(Deserialize)]
struct Edit {
    proposal: String,
}

async fn edit_session(
    State(st): State<Shared>,
    Path(sid): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let req: Edit = checked(&body, "Edit")?;
    session_step(st, sid, move |_, _, s| {
        s.user_edit(&req.proposal)?;
        Ok(None)
    })
    .await
}

#[derive(Deserialize)]
struct Empty {}

async fn apply_session(
    State(st): State<Shared>,
    Path(sid): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let _: Empty = checked(&body, "Empty")?;
    session_step(st, sid, |_, p, s| {
        let target = match s.kind {
            PromptKind::SchemaCreate | PromptKind::SchemaModify => ApplyTarget::Schema(&p.schema),
            PromptKind::MappingGenerate => ApplyTarget::Document(&p.document),
            _ => ApplyTarget::None,
        };
        let applied = s.apply(target)?;
        match &applied {
            Applied::Schema(schema) => p.schema = schema.clone(),
            Applied::Document(doc) => p.document = doc.clone(),
        }
        Ok(Some(serde_json::to_value(&applied).expect("applied serializes")))
    })
    .await
}

async fn discard_session(
    State(st): State<Shared>,
    Path(sid): Path<String>,
    body: Bytes,
) -> Result<Json<Value>, ApiError> {
    let _: Empty = checked(&body, "Empty")?;
    session_step(st, sid, |_, _, s| {
        s.discard()?;
        Ok(None)
    })
    .await
}

#[derive(Deserialize)]
struct InferRequest {
    document: DataNode,
    #[serde(default)]
    options: InferenceOptions,
}

async fn infer(body: Bytes) -> Result<Json<SchemaNode>, ApiError> {
    let req: InferRequest = checked(&body, "Infer")?;
    Ok(Json(blocking(move || Ok(infer_schema(&req.document, &req.options))).await?))
}

#[derive(Deserialize)]
struct TruncateRequest {
    document: DataNode,
    #[serde(default)]
    config: TruncationConfig,
}

async fn truncate(body: Bytes) -> Result<Json<Value>, ApiError> {
    let req: TruncateRequest = checked(&body, "Truncate")?;
    req.config
        .check()
        .map_err(|e| ApiError::unprocessable("invalid_request", e.to_string()))?;
    let out = blocking(move || Ok(truncate_document(&req.document, &req.config))).await?;
    Ok(Json(serde_json::to_value(out).expect("outcome serializes")))
}

#[derive(Deserialize)]
struct MappingValidate {
    source: String,
}

async fn mapping_validate(body: Bytes) -> Result<Json<Value>, ApiError> {
    let req: MappingValidate = checked(&body, "MappingValidate")?;
    Ok(Json(serde_json::to_value(validate_syntax(&req.source)).expect("report serializes")))
}

#[derive(Deserialize)]
struct MappingEvaluate {
    source: String,
    document: DataNode,
}

/// 200 with the result, 204 when the mapping yields nothing.
async fn mapping_evaluate(body: Bytes) -> Result<Response, ApiError> {
    let req: MappingEvaluate = checked(&body, "MappingEvaluate")?;
    let result = blocking(move || {
        let report = validate_syntax(&req.source);
        if !report.valid {
            return Err(ApiError::unprocessable("invalid_mapping", "mapping is not valid").with_report(report));
        }
        let ast = parse_mapping(&req.source)
            .map_err(|e| ApiError::unprocessable("invalid_mapping", e.render(&req.source)))?;
        evaluate_mapping(&ast, &req.document).map_err(|e| ApiError::unprocessable("evaluation", e.to_string()))
    })
    .await?;
    Ok(match result {
        Some(v) => Json(v).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}
