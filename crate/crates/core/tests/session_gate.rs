//! Exhaustive exploration of session operation sequences. Every sequence
//! of up to six operations is run from a fresh session; after each step the
//! gate invariant is checked.

use schemaforge_core::document::{node, parse_json, DocPath};
use schemaforge_core::gateway::{ChatRequest, GatewayConfig, GatewayError, Transport};
use schemaforge_core::session::{
    build_prompt, Applied, ApplyTarget, Phase, PromptBundle, PromptInputs, PromptKind,
    SessionState, EXAMPLE_INPUT, EXAMPLE_MAPPING, EXAMPLE_TARGET_SCHEMA,
};
use schemaforge_core::schema::SchemaNode;

const DEPTH: usize = 6;

#[derive(Debug, Clone, Copy)]
enum Op {
    SubmitValid,
    SubmitInvalid,
    SubmitFailing,
    EditValid,
    EditInvalid,
    Apply,
    Discard,
}

const OPS: [Op; 7] = [
    Op::SubmitValid,
    Op::SubmitInvalid,
    Op::SubmitFailing,
    Op::EditValid,
    Op::EditInvalid,
    Op::Apply,
    Op::Discard,
];

struct Script(Result<String, GatewayError>);

impl Transport for Script {
    fn send(&self, _: &ChatRequest) -> Result<String, GatewayError> {
        self.0.clone()
    }
}

struct Case {
    kind: PromptKind,
    bundle: PromptBundle,
    valid: &'static str,
    invalid: &'static str,
}

fn cases() -> Vec<Case> {
    let schema = SchemaNode::new(node(
        r#"{"type":"object","properties":{"a":{"type":"string"}}}"#,
    ));
    let doc = node(EXAMPLE_INPUT);
    let target = SchemaNode::new(node(EXAMPLE_TARGET_SCHEMA));
    let inputs = |kind| PromptInputs {
        description: Some("request".into()),
        schema: Some(schema.clone()),
        context_path: Some(DocPath::from_pointer("/properties/a").unwrap()),
        document: Some(doc.clone()),
        target_schema: Some(target.clone()),
        remarks: None,
    }
    .clone_for(kind);
    vec![
        Case {
            kind: PromptKind::SchemaModify,
            bundle: build_prompt(PromptKind::SchemaModify, &inputs(PromptKind::SchemaModify)).unwrap(),
            valid: "```json\n{\"type\":\"string\"}\n```",
            invalid: "{\"type\":\"strng\"}",
        },
        Case {
            kind: PromptKind::SchemaCreate,
            bundle: build_prompt(PromptKind::SchemaCreate, &inputs(PromptKind::SchemaCreate)).unwrap(),
            valid: "{\"type\":\"object\"}",
            invalid: "{\"required\":\"a\"}",
        },
        Case {
            kind: PromptKind::MappingGenerate,
            bundle: build_prompt(PromptKind::MappingGenerate, &inputs(PromptKind::MappingGenerate))
                .unwrap(),
            valid: EXAMPLE_MAPPING,
            invalid: "$frobnicate(mof_id)",
        },
        Case {
            kind: PromptKind::DataCreate,
            bundle: build_prompt(PromptKind::DataCreate, &inputs(PromptKind::DataCreate)).unwrap(),
            valid: "{\"a\":\"x\"}",
            invalid: "{\"a\":5}",
        },
        Case {
            kind: PromptKind::SchemaQuery,
            bundle: build_prompt(PromptKind::SchemaQuery, &inputs(PromptKind::SchemaQuery)).unwrap(),
            valid: "It has one property.",
            invalid: "",
        },
    ]
}

trait CloneFor {
    fn clone_for(self, kind: PromptKind) -> Self;
}

impl CloneFor for PromptInputs {
    fn clone_for(mut self, kind: PromptKind) -> Self {
        if kind == PromptKind::SchemaQuery {
            self.context_path = None;
        }
        self
    }
}

struct Stats {
    paths: u64,
    applied: u64,
    blocked: u64,
}

fn step(case: &Case, s: &mut SessionState, op: Op, stats: &mut Stats, trace: &[Op]) {
    let cfg = GatewayConfig {
        max_retries: 0,
        ..GatewayConfig::default()
    };
    let schema = SchemaNode::new(node(
        r#"{"type":"object","properties":{"a":{"type":"string"}}}"#,
    ));
    let doc = node(EXAMPLE_INPUT);
    let before = s.clone();
    match op {
        Op::SubmitValid => {
            let _ = s.submit(&case.bundle, &cfg, &Script(Ok(case.valid.into())));
        }
        Op::SubmitInvalid => {
            let _ = s.submit(&case.bundle, &cfg, &Script(Ok(case.invalid.into())));
        }
        Op::SubmitFailing => {
            let r = s.submit(&case.bundle, &cfg, &Script(Err(GatewayError::RateLimited { attempts: 1 })));
            assert!(r.is_err());
            assert_eq!(*s, before, "failed submit changed state after {trace:?}");
        }
        Op::EditValid => {
            let _ = s.user_edit(case.valid);
        }
        Op::EditInvalid => {
            let _ = s.user_edit(case.invalid);
        }
        Op::Apply => {
            let gate_open = before.validation.as_ref().is_some_and(|v| v.valid());
            let target = match case.kind {
                PromptKind::MappingGenerate => ApplyTarget::Document(&doc),
                _ => ApplyTarget::Schema(&schema),
            };
            match s.apply(target) {
                Ok(applied) => {
                    stats.applied += 1;
                    assert!(gate_open, "apply succeeded with invalid proposal after {trace:?}");
                    if let Applied::Document(d) = &applied {
                        if case.kind == PromptKind::MappingGenerate {
                            assert_eq!(d, &parse_json(r#"{"materialId":"mof-123","metal":"ZrCl4","linkers":["BDC","DABCO"]}"#).unwrap());
                        }
                    }
                }
                Err(_) => {
                    stats.blocked += 1;
                    assert_eq!(*s, before, "failed apply changed state after {trace:?}");
                }
            }
        }
        Op::Discard => {
            let _ = s.discard();
        }
    }
    // Gate invariant.
    if s.phase == Phase::Applied {
        let v = s.validation.as_ref().expect("applied without validation");
        assert!(v.valid(), "applied with invalid proposal after {trace:?} {op:?}");
        // The answer that started this proposal is kept byte for byte.
        let raw = &s.history.last().expect("applied without history").raw_response;
        assert!(raw == case.valid || raw == case.invalid, "{raw:?}");
    }
    assert_eq!(s.can_apply(), {
        matches!(s.phase, Phase::Proposed | Phase::UserEditing)
            && !s.kind.is_query()
            && s.validation.as_ref().is_some_and(|v| v.valid())
    });
}

fn explore(case: &Case, s: &SessionState, trace: &mut Vec<Op>, stats: &mut Stats) {
    if trace.len() == DEPTH {
        stats.paths += 1;
        return;
    }
    for op in OPS {
        let mut next = s.clone();
        step(case, &mut next, op, stats, trace);
        trace.push(op);
        explore(case, &next, trace, stats);
        trace.pop();
    }
}

/// Explores every case to [`DEPTH`] and returns the number of complete
/// paths. Panics on the first violated invariant.
pub fn explore_all() -> u64 {
    let mut total = 0;
    for case in cases() {
        let mut stats = Stats {
            paths: 0,
            applied: 0,
            blocked: 0,
        };
        explore(&case, &SessionState::new(case.kind), &mut Vec::new(), &mut stats);
        assert_eq!(stats.paths, 7u64.pow(DEPTH as u32));
        if case.kind.is_query() {
            assert_eq!(stats.applied, 0);
        } else {
            assert!(stats.applied > 0 && stats.blocked > 0, "{:?}", case.kind);
        }
        total += stats.paths;
    }
    total
}

#[test]
fn no_path_reaches_applied_with_invalid_proposal() {
    assert_eq!(explore_all(), 5 * 7u64.pow(DEPTH as u32));
}
