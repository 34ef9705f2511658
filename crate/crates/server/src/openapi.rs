//! Request schemas and the OpenAPI description built from them.

use schemaforge_core::session::PromptKind;
use serde_json::{json, Value};

fn inputs_schema() -> Value {
    json!({
        "type": "object",
        "properties": {
            "description": {"type": "string"},
            "schema": {"type": ["object", "boolean"]},
            "context_path": {"type": "array", "items": {"type": ["string", "integer"]}},
            "document": {},
            "target_schema": {"type": ["object", "boolean"]},
            "remarks": {"type": "string"}
        },
        "additionalProperties": false
    })
}

fn truncation_schema() -> Value {
    let positive = json!({"type": "integer", "minimum": 1});
    json!({
        "type": "object",
        "properties": {
            "target_bytes": positive,
            "n_start": positive,
            "n_min": positive,
            "property_factor": positive
        },
        "additionalProperties": false
    })
}

/// Request body schema by name.
pub fn request_schema(name: &str) -> Value {
    let kinds: Vec<&str> = PromptKind::ALL.iter().map(|k| k.as_str()).collect();
    match name {
        "CreateProject" => json!({
            "type": "object",
            "properties": {"schema": {"type": ["object", "boolean"]}, "document": {}},
            "additionalProperties": false
        }),
        "PutSchema" => json!({
            "type": "object",
            "required": ["schema"],
            "properties": {"schema": {"type": ["object", "boolean"]}},
            "additionalProperties": false
        }),
        "CreateSession" => json!({
            "type": "object",
            "required": ["kind"],
            "properties": {"kind": {"enum": kinds}, "inputs": inputs_schema()},
            "additionalProperties": false
        }),
        "Submit" => json!({
            "type": "object",
            "properties": {"inputs": inputs_schema()},
            "additionalProperties": false
        }),
        "Edit" => json!({
            "type": "object",
            "required": ["proposal"],
            "properties": {"proposal": {"type": "string"}},
            "additionalProperties": false
        }),
        "Empty" => json!({"type": "object", "additionalProperties": false}),
        "Infer" => json!({
            "type": "object",
            "required": ["document"],
            "properties": {
                "document": {},
                "options": {
                    "type": "object",
                    "properties": {
                        "detect_integer": {"type": "boolean"},
                        "required_mode": {"enum": ["all-present", "intersection"]},
                        "merge_array_items": {"type": "boolean"}
                    },
                    "additionalProperties": false
                }
            },
            "additionalProperties": false
        }),
        "Truncate" => json!({
            "type": "object",
            "required": ["document"],
            "properties": {"document": {}, "config": truncation_schema()},
            "additionalProperties": false
        }),
        "MappingValidate" => json!({
            "type": "object",
            "required": ["source"],
            "properties": {"source": {"type": "string"}},
            "additionalProperties": false
        }),
        "MappingEvaluate" => json!({
            "type": "object",
            "required": ["source", "document"],
            "properties": {"source": {"type": "string"}, "document": {}},
            "additionalProperties": false
        }),
        other => panic!("no request schema named {other}"),
    }
}

pub const REQUEST_SCHEMAS: [&str; 10] = [
    "CreateProject",
    "PutSchema",
    "CreateSession",
    "Submit",
    "Edit",
    "Empty",
    "Infer",
    "Truncate",
    "MappingValidate",
    "MappingEvaluate",
];

/// (method, path, request schema, success status, summary)
pub const ROUTES: [(&str, &str, Option<&str>, u16, &str); 16] = [
    ("post", "/projects", Some("CreateProject"), 201, "Create a project"),
    ("get", "/projects/{id}", None, 200, "Read a project"),
    ("put", "/projects/{id}/schema", Some("PutSchema"), 200, "Replace the project schema"),
    ("put", "/projects/{id}/document", None, 200, "Replace the project document; body in ?format=json|yaml|xml|csv"),
    ("post", "/projects/{id}/sessions", Some("CreateSession"), 201, "Start an assistance session and submit its first prompt"),
    ("get", "/sessions/{sid}", None, 200, "Read a session"),
    ("post", "/sessions/{sid}/submit", Some("Submit"), 200, "Send a follow-up prompt"),
    ("post", "/sessions/{sid}/edit", Some("Edit"), 200, "Replace the proposal with edited text"),
    ("post", "/sessions/{sid}/apply", Some("Empty"), 200, "Apply a validated proposal to the project"),
    ("post", "/sessions/{sid}/discard", Some("Empty"), 200, "Discard the proposal"),
    ("post", "/infer", Some("Infer"), 200, "Infer a schema from a document"),
    ("post", "/truncate", Some("Truncate"), 200, "Truncate a document below a byte budget"),
    ("post", "/mapping/validate", Some("MappingValidate"), 200, "Check mapping syntax and function names"),
    ("post", "/mapping/evaluate", Some("MappingEvaluate"), 200, "Evaluate a mapping on a document"),
    ("get", "/openapi.json", None, 200, "This description"),
    ("get", "/", None, 200, "Web client"),
];

pub fn openapi() -> Value {
    let mut paths = serde_json::Map::new();
    for (method, path, body, status, summary) in ROUTES {
        let entry = paths.entry(path.to_string()).or_insert_with(|| json!({}));
        let mut op = json!({
            "summary": summary,
            "responses": {
                status.to_string(): {"description": "success"},
                "404": {"description": "unknown project or session"},
                "409": {"description": "illegal session transition or blocked apply"},
                "422": {"description": "validation failure; the report is embedded"},
                "502": {"description": "language model endpoint failure"}
            }
        });
        if let Some(name) = body {
            op["requestBody"] = json!({
                "required": true,
                "content": {"application/json": {"schema": {"$ref": format!("#/components/schemas/{name}")}}}
            });
        }
        entry[method] = op;
    }
    let schemas: serde_json::Map<String, Value> = REQUEST_SCHEMAS
        .iter()
        .map(|n| (n.to_string(), request_schema(n)))
        .collect();
    json!({
        "openapi": "3.1.0",
        "info": {"title": "schemaforge", "version": env!("CARGO_PKG_VERSION")},
        "paths": paths,
        "components": {"schemas": schemas}
    })
}
