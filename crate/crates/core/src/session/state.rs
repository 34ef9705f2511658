use std::fmt;

use serde::{Deserialize, Serialize};

use super::prompt::{PromptBundle, PromptKind};
use super::strip::strip_artifacts;
use crate::document::{parse_json, DataNode, DocPath};
use crate::gateway::{complete, ChatMessage, GatewayConfig, GatewayError, Transport};
use crate::mapping::{evaluate_mapping, parse_mapping, validate_syntax, EvalError, SyntaxReport};
use crate::schema::{
    merge_subschema, validate_instance, validate_schema, MergeError, SchemaNode, ValidationReport,
    Violation,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Idle,
    AwaitingLlm,
    Proposed,
    UserEditing,
    Applied,
    Discarded,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Idle => "idle",
            Phase::AwaitingLlm => "awaiting_llm",
            Phase::Proposed => "proposed",
            Phase::UserEditing => "user_editing",
            Phase::Applied => "applied",
            Phase::Discarded => "discarded",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Validation result of the current proposal, per kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Validation {
    Schema { report: ValidationReport },
    Document { report: ValidationReport },
    Mapping { report: SyntaxReport },
    /// Query answers are prose and are not validated.
    Skipped,
}

impl Validation {
    pub fn valid(&self) -> bool {
        match self {
            Validation::Schema { report } | Validation::Document { report } => report.valid,
            Validation::Mapping { report } => report.valid,
            Validation::Skipped => true,
        }
    }
}

/// One request as sent, with the transport's byte-exact answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub bundle: PromptBundle,
    pub raw_response: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub kind: PromptKind,
    pub phase: Phase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_path: Option<DocPath>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance_schema: Option<SchemaNode>,
    #[serde(default)]
    pub proposal: Option<String>,
    #[serde(default)]
    pub validation: Option<Validation>,
    #[serde(default)]
    pub history: Vec<Exchange>,
}

/// What an applied proposal acts on.
#[derive(Debug, Clone, Copy)]
pub enum ApplyTarget<'a> {
    /// The schema whose sub-schema at the session's context path is
    /// replaced. Schema creation may apply without one.
    Schema(&'a SchemaNode),
    /// The complete, untruncated input document of a mapping.
    Document(&'a DataNode),
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum Applied {
    Schema(SchemaNode),
    Document(DataNode),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SessionError {
    #[error("cannot {action} while the session is {phase}")]
    IllegalTransition { action: &'static str, phase: Phase },
    #[error("prompt is for {bundle} but the session is {session}")]
    KindMismatch { session: PromptKind, bundle: PromptKind },
    #[error("apply blocked: the current proposal has not passed validation")]
    Blocked,
    #[error("{0} answers cannot be applied")]
    NotApplicable(PromptKind),
    #[error("apply needs {0}")]
    MissingTarget(&'static str),
    #[error("mapping produced no value")]
    NoOutput,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Merge(#[from] MergeError),
    #[error("mapping failed: {0}")]
    Evaluation(#[from] EvalError),
    #[error("proposal cannot be read: {0}")]
    Proposal(String),
}

fn json_violation(message: String) -> Violation {
    Violation {
        instance_path: DocPath::root(),
        schema_path: DocPath::root(),
        keyword: "json".into(),
        message,
    }
}

/// Validates proposal text the way `submit` and `user_edit` do.
pub fn validate_proposal(
    kind: PromptKind,
    text: &str,
    instance_schema: Option<&SchemaNode>,
) -> Validation {
    match kind {
        PromptKind::SchemaQuery | PromptKind::DataQuery => Validation::Skipped,
        PromptKind::MappingGenerate => Validation::Mapping {
            report: validate_syntax(text),
        },
        PromptKind::SchemaCreate | PromptKind::SchemaModify => {
            let report = match parse_json(text) {
                Ok(node) => validate_schema(&node),
                Err(e) => ValidationReport::from_violations(vec![json_violation(format!(
                    "not valid JSON: {e}"
                ))]),
            };
            Validation::Schema { report }
        }
        PromptKind::DataCreate | PromptKind::DataModify => {
            let report = match (parse_json(text), instance_schema) {
                (Err(e), _) => ValidationReport::from_violations(vec![json_violation(format!(
                    "not valid JSON: {e}"
                ))]),
                (Ok(_), None) => ValidationReport::ok(),
                (Ok(doc), Some(schema)) => match validate_instance(&doc, schema) {
                    Ok(r) => r,
                    Err(e) => ValidationReport::from_violations(vec![Violation {
                        keyword: "schema".into(),
                        ..json_violation(e.to_string())
                    }]),
                },
            };
            Validation::Document { report }
        }
    }
}

impl SessionState {
    pub fn new(kind: PromptKind) -> Self {
        SessionState {
            kind,
            phase: Phase::Idle,
            context_path: None,
            instance_schema: None,
            proposal: None,
            validation: None,
            history: Vec::new(),
        }
    }

    /// True exactly when `apply` would pass its gate.
    pub fn can_apply(&self) -> bool {
        matches!(self.phase, Phase::Proposed | Phase::UserEditing)
            && !self.kind.is_query()
            && self.proposal.is_some()
            && self.validation.as_ref().is_some_and(Validation::valid)
    }

    /// The messages actually sent: the bundle, with the previous proposal
    /// inserted as an assistant turn before the final user message.
    pub fn outgoing(&self, bundle: &PromptBundle) -> PromptBundle {
        let mut sent = bundle.clone();
        if let Some(prev) = self.proposal.as_ref().filter(|p| !p.trim().is_empty()) {
            let at = sent.messages.len().saturating_sub(1);
            sent.messages.insert(at, ChatMessage::assistant(prev.clone()));
        }
        sent
    }

    /// Sends the prompt and stores the answer as the new proposal. On a
    /// gateway error the session is left exactly as it was.
    pub fn submit(
        &mut self,
        bundle: &PromptBundle,
        config: &GatewayConfig,
        transport: &dyn Transport,
    ) -> Result<(), SessionError> {
        if !matches!(
            self.phase,
            Phase::Idle | Phase::Proposed | Phase::Discarded | Phase::Applied
        ) {
            return Err(SessionError::IllegalTransition {
                action: "submit",
                phase: self.phase,
            });
        }
        if bundle.kind != self.kind {
            return Err(SessionError::KindMismatch {
                session: self.kind,
                bundle: bundle.kind,
            });
        }
        let sent = self.outgoing(bundle);
        let before = self.phase;
        self.phase = Phase::AwaitingLlm;
        let raw = match complete(config, transport, &sent.messages) {
            Ok(raw) => raw,
            Err(e) => {
                self.phase = before;
                return Err(e.into());
            }
        };
        let proposal = strip_artifacts(&raw);
        if bundle.context_path.is_some() {
            self.context_path = bundle.context_path.clone();
        }
        if bundle.instance_schema.is_some() {
            self.instance_schema = bundle.instance_schema.clone();
        }
        self.validation = Some(validate_proposal(
            self.kind,
            &proposal,
            self.instance_schema.as_ref(),
        ));
        self.proposal = Some(proposal);
        self.history.push(Exchange {
            bundle: sent,
            raw_response: raw,
        });
        self.phase = Phase::Proposed;
        Ok(())
    }

    pub fn user_edit(&mut self, edited: &str) -> Result<(), SessionError> {
        if !matches!(self.phase, Phase::Proposed | Phase::UserEditing) {
            return Err(SessionError::IllegalTransition {
                action: "edit",
                phase: self.phase,
            });
        }
        self.validation = Some(validate_proposal(
            self.kind,
            edited,
            self.instance_schema.as_ref(),
        ));
        self.proposal = Some(edited.to_string());
        self.phase = Phase::UserEditing;
        Ok(())
    }

    pub fn discard(&mut self) -> Result<(), SessionError> {
        if !matches!(self.phase, Phase::Proposed | Phase::UserEditing) {
            return Err(SessionError::IllegalTransition {
                action: "discard",
                phase: self.phase,
            });
        }
        self.proposal = None;
        self.validation = None;
        self.phase = Phase::Discarded;
        Ok(())
    }

    /// Applies the validated proposal. Nothing changes unless it succeeds.
    pub fn apply(&mut self, target: ApplyTarget<'_>) -> Result<Applied, SessionError> {
        if !matches!(self.phase, Phase::Proposed | Phase::UserEditing) {
            return Err(SessionError::IllegalTransition {
                action: "apply",
                phase: self.phase,
            });
        }
        if self.kind.is_query() {
            return Err(SessionError::NotApplicable(self.kind));
        }
        if !self.can_apply() {
            return Err(SessionError::Blocked);
        }
        let proposal = self.proposal.as_deref().expect("checked by can_apply");
        let out = match self.kind {
            PromptKind::SchemaCreate | PromptKind::SchemaModify => {
                let replacement = SchemaNode::new(
                    parse_json(proposal).map_err(|e| SessionError::Proposal(e.to_string()))?,
                );
                let path = self.context_path.clone().unwrap_or_default();
                let base = match target {
                    ApplyTarget::Schema(s) => s.clone(),
                    _ if path.is_root() => SchemaNode::any(),
                    _ => return Err(SessionError::MissingTarget("the schema to modify")),
                };
                Applied::Schema(merge_subschema(&base, &path, &replacement)?)
            }
            PromptKind::DataCreate | PromptKind::DataModify => Applied::Document(
                parse_json(proposal).map_err(|e| SessionError::Proposal(e.to_string()))?,
            ),
            PromptKind::MappingGenerate => {
                let ApplyTarget::Document(doc) = target else {
                    return Err(SessionError::MissingTarget("the input document"));
                };
                let ast = parse_mapping(proposal)
                    .map_err(|e| SessionError::Proposal(e.render(proposal)))?;
                let result = evaluate_mapping(&ast, doc)?.ok_or(SessionError::NoOutput)?;
                Applied::Document(result)
            }
            PromptKind::SchemaQuery | PromptKind::DataQuery => unreachable!("rejected above"),
        };
        self.phase = Phase::Applied;
        Ok(out)
    }
}
