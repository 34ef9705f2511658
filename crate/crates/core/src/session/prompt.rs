use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::document::{compact_len, serialize_json, to_pretty_json, DataNode, DocPath};
use crate::gateway::ChatMessage;
use crate::infer::{infer_schema, InferenceOptions};
use crate::schema::{select_subschema, SchemaNode, SelectError};
use crate::truncate::{truncate_document, ConfigError, TruncationConfig};

/// The sentence every schema-authoring system prompt opens with.
pub const ROLE_SENTENCE: &str = "You are a JSON Schema expert";

/// Mapping-language reference injected verbatim into mapping prompts.
pub const MAPPING_INSTRUCTIONS: &str = include_str!("../../assets/mapping_instructions.md");

pub const EXAMPLE_INPUT: &str = include_str!("../../assets/example/input.json");
pub const EXAMPLE_TARGET_SCHEMA: &str = include_str!("../../assets/example/target_schema.json");
pub const EXAMPLE_MAPPING: &str = include_str!("../../assets/example/mapping.jnt");
pub const EXAMPLE_OUTPUT: &str = include_str!("../../assets/example/output.json");

mod templates {
    pub const SCHEMA_SYSTEM: &str = include_str!("../../assets/prompts/schema_system.txt");
    pub const SCHEMA_CREATE: &str = include_str!("../../assets/prompts/schema_create.txt");
    pub const SCHEMA_MODIFY: &str = include_str!("../../assets/prompts/schema_modify.txt");
    pub const SCHEMA_QUERY_SYSTEM: &str =
        include_str!("../../assets/prompts/schema_query_system.txt");
    pub const SCHEMA_QUERY: &str = include_str!("../../assets/prompts/schema_query.txt");
    pub const DATA_SYSTEM: &str = include_str!("../../assets/prompts/data_system.txt");
    pub const DATA_CREATE: &str = include_str!("../../assets/prompts/data_create.txt");
    pub const DATA_MODIFY: &str = include_str!("../../assets/prompts/data_modify.txt");
    pub const DATA_QUERY_SYSTEM: &str = include_str!("../../assets/prompts/data_query_system.txt");
    pub const DATA_QUERY: &str = include_str!("../../assets/prompts/data_query.txt");
    pub const MAPPING_SYSTEM: &str = include_str!("../../assets/prompts/mapping_system.txt");
    pub const MAPPING_EXAMPLE: &str = include_str!("../../assets/prompts/mapping_example.txt");
    pub const MAPPING_REQUEST: &str = include_str!("../../assets/prompts/mapping_request.txt");

    pub const ALL: [(&str, &str); 13] = [
        ("schema_system", SCHEMA_SYSTEM),
        ("schema_create", SCHEMA_CREATE),
        ("schema_modify", SCHEMA_MODIFY),
        ("schema_query_system", SCHEMA_QUERY_SYSTEM),
        ("schema_query", SCHEMA_QUERY),
        ("data_system", DATA_SYSTEM),
        ("data_create", DATA_CREATE),
        ("data_modify", DATA_MODIFY),
        ("data_query_system", DATA_QUERY_SYSTEM),
        ("data_query", DATA_QUERY),
        ("mapping_system", MAPPING_SYSTEM),
        ("mapping_example", MAPPING_EXAMPLE),
        ("mapping_request", MAPPING_REQUEST),
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    SchemaCreate,
    SchemaModify,
    SchemaQuery,
    DataCreate,
    DataModify,
    DataQuery,
    MappingGenerate,
}

impl PromptKind {
    pub const ALL: [PromptKind; 7] = [
        PromptKind::SchemaCreate,
        PromptKind::SchemaModify,
        PromptKind::SchemaQuery,
        PromptKind::DataCreate,
        PromptKind::DataModify,
        PromptKind::DataQuery,
        PromptKind::MappingGenerate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PromptKind::SchemaCreate => "schema_create",
            PromptKind::SchemaModify => "schema_modify",
            PromptKind::SchemaQuery => "schema_query",
            PromptKind::DataCreate => "data_create",
            PromptKind::DataModify => "data_modify",
            PromptKind::DataQuery => "data_query",
            PromptKind::MappingGenerate => "mapping_generate",
        }
    }

    /// Query kinds answer in prose and are never validated or applied.
    pub fn is_query(self) -> bool {
        matches!(self, PromptKind::SchemaQuery | PromptKind::DataQuery)
    }
}

impl fmt::Display for PromptKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown prompt kind `{0}`")]
pub struct UnknownKind(pub String);

impl FromStr for PromptKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| UnknownKind(s.to_string()))
    }
}

/// Everything a prompt may draw on. Which fields are required depends on
/// the kind; see [`build_prompt`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptInputs {
    /// The user's request, description or question.
    pub description: Option<String>,
    pub schema: Option<SchemaNode>,
    pub context_path: Option<DocPath>,
    pub document: Option<DataNode>,
    pub target_schema: Option<SchemaNode>,
    pub remarks: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationSummary {
    pub original_bytes: usize,
    pub bytes: usize,
    pub final_n: usize,
    pub iterations: usize,
    pub budget_met: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub kind: PromptKind,
    pub messages: Vec<ChatMessage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_path: Option<DocPath>,
    /// Schema that data proposals are checked against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_schema: Option<SchemaNode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationSummary>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("{kind} prompt needs `{field}`")]
    MissingInput { kind: PromptKind, field: &'static str },
    #[error("cannot select the context sub-schema: {0}")]
    Selection(#[from] SelectError),
    #[error("invalid truncation settings: {0}")]
    Truncation(#[from] ConfigError),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PromptSettings {
    pub truncation: TruncationConfig,
    pub inference: InferenceOptions,
}

/// Fills `{{name}}` placeholders in one pass, so placeholder-like text in
/// the values is never expanded. Unknown placeholders are left as they are.
pub fn render(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find("{{") {
        out.push_str(&rest[..open]);
        let after = &rest[open + 2..];
        match after.find("}}") {
            Some(close) => {
                let name = &after[..close];
                match values.iter().find(|(k, _)| *k == name) {
                    Some((_, v)) => out.push_str(v),
                    None => out.push_str(&rest[open..open + 2 + close + 2]),
                }
                rest = &after[close + 2..];
            }
            None => {
                out.push_str(&rest[open..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out.trim_end().to_string()
}

/// Placeholder names used by the bundled templates.
pub fn template_placeholders() -> Vec<(&'static str, Vec<String>)> {
    templates::ALL
        .iter()
        .map(|(name, text)| {
            let mut found = Vec::new();
            let mut rest = *text;
            while let Some(open) = rest.find("{{") {
                let after = &rest[open + 2..];
                let Some(close) = after.find("}}") else { break };
                found.push(after[..close].to_string());
                rest = &after[close + 2..];
            }
            (*name, found)
        })
        .collect()
}

pub fn build_prompt(kind: PromptKind, inputs: &PromptInputs) -> Result<PromptBundle, PromptError> {
    build_prompt_with(kind, inputs, &PromptSettings::default())
}

fn need<'a, T>(kind: PromptKind, field: &'static str, v: &'a Option<T>) -> Result<&'a T, PromptError> {
    v.as_ref().ok_or(PromptError::MissingInput { kind, field })
}

fn need_text<'a>(
    kind: PromptKind,
    field: &'static str,
    v: &'a Option<String>,
) -> Result<&'a str, PromptError> {
    match v.as_deref().map(str::trim) {
        Some(t) if !t.is_empty() => Ok(t),
        _ => Err(PromptError::MissingInput { kind, field }),
    }
}

fn pretty_schema(schema: &SchemaNode) -> String {
    to_pretty_json(schema.as_node())
}

/// Assembles the message list for one assistance task.
///
/// Required inputs: `description` for every kind except mapping_generate;
/// `schema` and `context_path` for schema_modify; `schema` for
/// schema_query; `document` for data_modify, data_query and
/// mapping_generate; `target_schema` for mapping_generate.
pub fn build_prompt_with(
    kind: PromptKind,
    inputs: &PromptInputs,
    settings: &PromptSettings,
) -> Result<PromptBundle, PromptError> {
    let mut bundle = PromptBundle {
        kind,
        messages: Vec::new(),
        context_path: None,
        instance_schema: None,
        truncation: None,
    };
    match kind {
        PromptKind::SchemaCreate => {
            let description = need_text(kind, "description", &inputs.description)?;
            bundle.messages = vec![
                ChatMessage::system(templates::SCHEMA_SYSTEM.trim_end()),
                ChatMessage::user(render(templates::SCHEMA_CREATE, &[("description", description)])),
            ];
        }
        PromptKind::SchemaModify => {
            let description = need_text(kind, "description", &inputs.description)?;
            let schema = need(kind, "schema", &inputs.schema)?;
            let path = need(kind, "context_path", &inputs.context_path)?;
            let sub = select_subschema(schema, path)?;
            bundle.messages = vec![
                ChatMessage::system(templates::SCHEMA_SYSTEM.trim_end()),
                ChatMessage::user(render(
                    templates::SCHEMA_MODIFY,
                    &[("sub_schema", &pretty_schema(&sub)), ("description", description)],
                )),
            ];
            bundle.context_path = Some(path.clone());
        }
        PromptKind::SchemaQuery => {
            let description = need_text(kind, "description", &inputs.description)?;
            let schema = need(kind, "schema", &inputs.schema)?;
            let path = inputs.context_path.clone().unwrap_or_default();
            let sub = select_subschema(schema, &path)?;
            bundle.messages = vec![
                ChatMessage::system(templates::SCHEMA_QUERY_SYSTEM.trim_end()),
                ChatMessage::user(render(
                    templates::SCHEMA_QUERY,
                    &[("sub_schema", &pretty_schema(&sub)), ("description", description)],
                )),
            ];
            bundle.context_path = Some(path);
        }
        PromptKind::DataCreate => {
            let description = need_text(kind, "description", &inputs.description)?;
            let schema = inputs.schema.clone().unwrap_or_else(SchemaNode::any);
            bundle.messages = vec![
                ChatMessage::system(templates::DATA_SYSTEM.trim_end()),
                ChatMessage::user(render(
                    templates::DATA_CREATE,
                    &[("target_schema", &pretty_schema(&schema)), ("description", description)],
                )),
            ];
            bundle.instance_schema = inputs.schema.clone();
        }
        PromptKind::DataModify => {
            let description = need_text(kind, "description", &inputs.description)?;
            let document = need(kind, "document", &inputs.document)?;
            let schema = inputs.schema.clone().unwrap_or_else(SchemaNode::any);
            bundle.messages = vec![
                ChatMessage::system(templates::DATA_SYSTEM.trim_end()),
                ChatMessage::user(render(
                    templates::DATA_MODIFY,
                    &[
                        ("target_schema", &pretty_schema(&schema)),
                        ("document", &to_pretty_json(document)),
                        ("description", description),
                    ],
                )),
            ];
            bundle.instance_schema = inputs.schema.clone();
        }
        PromptKind::DataQuery => {
            let description = need_text(kind, "description", &inputs.description)?;
            let document = need(kind, "document", &inputs.document)?;
            settings.truncation.check()?;
            let outcome = truncate_document(document, &settings.truncation);
            bundle.messages = vec![
                ChatMessage::system(templates::DATA_QUERY_SYSTEM.trim_end()),
                ChatMessage::user(render(
                    templates::DATA_QUERY,
                    &[
                        ("document", &serialize_json(&outcome.doc, true)),
                        ("description", description),
                    ],
                )),
            ];
            bundle.truncation = Some(summary(document, &outcome));
        }
        PromptKind::MappingGenerate => {
            let document = need(kind, "document", &inputs.document)?;
            let target = need(kind, "target_schema", &inputs.target_schema)?;
            settings.truncation.check()?;
            let outcome = truncate_document(document, &settings.truncation);
            // The source schema always comes from the complete document.
            let source = infer_schema(document, &settings.inference);
            let remarks = inputs
                .remarks
                .as_deref()
                .map(str::trim)
                .filter(|r| !r.is_empty())
                .unwrap_or("none");
            bundle.messages = vec![
                ChatMessage::system(render(
                    templates::MAPPING_SYSTEM,
                    &[("instructions", MAPPING_INSTRUCTIONS.trim_end())],
                )),
                ChatMessage::user(render(
                    templates::MAPPING_EXAMPLE,
                    &[
                        ("example_input", EXAMPLE_INPUT.trim_end()),
                        ("example_target_schema", EXAMPLE_TARGET_SCHEMA.trim_end()),
                        ("example_output", EXAMPLE_OUTPUT.trim_end()),
                    ],
                )),
                ChatMessage::assistant(EXAMPLE_MAPPING.trim_end()),
                ChatMessage::user(render(
                    templates::MAPPING_REQUEST,
                    &[
                        ("truncated_document", &serialize_json(&outcome.doc, true)),
                        ("source_schema", &pretty_schema(&source)),
                        ("target_schema", &pretty_schema(target)),
                        ("remarks", remarks),
                    ],
                )),
            ];
            bundle.truncation = Some(summary(document, &outcome));
        }
    }
    Ok(bundle)
}

fn summary(original: &DataNode, outcome: &crate::truncate::TruncationOutcome) -> TruncationSummary {
    TruncationSummary {
        original_bytes: compact_len(original),
        bytes: outcome.bytes,
        final_n: outcome.final_n,
        iterations: outcome.iterations,
        budget_met: outcome.budget_met,
    }
}

/// Text between a section heading line and the next blank line followed by
/// another heading; used by tests and tooling to pull sections back out of a
/// rendered prompt.
pub fn prompt_section<'a>(message: &'a str, heading: &str) -> Option<&'a str> {
    let start = message.find(heading)? + heading.len();
    let body = message[start..].strip_prefix('\n')?;
    let end = body.find("\n\n").unwrap_or(body.len());
    Some(&body[..end])
}
