mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use schemaforge_core::document::{compact_len, node, parse_json, serialize_json, DocPath};
use schemaforge_core::infer::{infer_schema, InferenceOptions};
use schemaforge_core::schema::SchemaNode;
use schemaforge_core::session::{
    build_prompt, prompt_section, template_placeholders, PromptInputs, PromptKind, ROLE_SENTENCE,
    MAPPING_INSTRUCTIONS,
};
use schemaforge_core::gateway::Role;

const DOC_HEADING: &str = "Input document (possibly truncated):";
const SOURCE_HEADING: &str = "Source schema (inferred from the complete input document):";

fn schema() -> SchemaNode {
    SchemaNode::new(node(
        r#"{"type":"object","properties":{"experiments":{"type":"array","items":{"type":"object"}}}}"#,
    ))
}

#[test]
fn schema_prompts_carry_the_role_sentence() {
    let create = build_prompt(PromptKind::SchemaCreate, &PromptInputs {
        description: Some("experiments with ligands".into()),
        ..Default::default()
    })
    .unwrap();
    let modify = build_prompt(PromptKind::SchemaModify, &PromptInputs {
        description: Some("add a temperature".into()),
        schema: Some(schema()),
        context_path: Some(DocPath::from_pointer("/properties/experiments/items").unwrap()),
        ..Default::default()
    })
    .unwrap();
    for bundle in [&create, &modify] {
        assert_eq!(bundle.messages[0].role, Role::System);
        assert!(bundle.messages[0].content.starts_with(ROLE_SENTENCE));
        assert!(bundle.messages[0].content.contains("You are a JSON Schema expert"));
    }
    // Only the selected sub-schema is sent.
    let sel = prompt_section(&modify.messages[1].content, "Selected schema:").unwrap();
    assert_eq!(parse_json(sel).unwrap(), node(r#"{"type":"object"}"#));
}

#[test]
fn mapping_prompt_truncates_document_but_not_schema_source() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let doc = common::document_between(&mut rng, 1 << 20, (1 << 20) + (1 << 18));
    // A 1 MB row document also exercises the keep-first behavior.
    for doc in [doc, common::rows_document()] {
        assert!(compact_len(&doc) > 900_000);
        let bundle = build_prompt(PromptKind::MappingGenerate, &PromptInputs {
            document: Some(doc.clone()),
            target_schema: Some(schema()),
            remarks: Some("purity yes/no to boolean".into()),
            ..Default::default()
        })
        .unwrap();
        let request = &bundle.messages.last().unwrap().content;
        let embedded = prompt_section(request, DOC_HEADING).unwrap();
        assert!(embedded.len() <= 65536, "{} bytes", embedded.len());
        let t = bundle.truncation.clone().unwrap();
        assert!(t.budget_met);
        assert_eq!(embedded.len(), t.bytes);
        assert_eq!(t.original_bytes, compact_len(&doc));
        assert_ne!(parse_json(embedded).unwrap(), doc);

        let source = parse_json(prompt_section(request, SOURCE_HEADING).unwrap()).unwrap();
        let full = infer_schema(&doc, &InferenceOptions::default());
        assert_eq!(source, *full.as_node());
        assert_eq!(serialize_json(&source, true), full.to_json(true));
    }
}

#[test]
fn mapping_prompt_layout() {
    let bundle = build_prompt(PromptKind::MappingGenerate, &PromptInputs {
        document: Some(node(r#"{"a":1}"#)),
        target_schema: Some(schema()),
        ..Default::default()
    })
    .unwrap();
    let roles: Vec<Role> = bundle.messages.iter().map(|m| m.role).collect();
    assert_eq!(roles, [Role::System, Role::User, Role::Assistant, Role::User]);
    assert!(bundle.messages[0].content.contains(MAPPING_INSTRUCTIONS.trim_end()));
    assert_eq!(prompt_section(&bundle.messages[3].content, "User remarks:"), Some("none"));
}

#[test]
fn every_placeholder_is_filled() {
    let inputs = PromptInputs {
        description: Some("{{description}} stays literal".into()),
        schema: Some(schema()),
        context_path: Some(DocPath::root()),
        document: Some(node(r#"{"x":"{{document}}"}"#)),
        target_schema: Some(schema()),
        remarks: Some("r".into()),
    };
    let names: Vec<String> = template_placeholders().into_iter().flat_map(|(_, v)| v).collect();
    assert!(!names.is_empty());
    for kind in PromptKind::ALL {
        let bundle = build_prompt(kind, &inputs).unwrap();
        for m in &bundle.messages {
            for name in &names {
                let token = format!("{{{{{name}}}}}");
                let literal = m.content.matches(&token).count();
                // Only user-supplied text may contain a placeholder token.
                let supplied = ["{{description}}", "{{document}}"].contains(&token.as_str());
                assert!(literal == 0 || supplied, "{kind}: unfilled {token}");
            }
        }
    }
}

#[test]
fn missing_inputs_are_reported() {
    let err = build_prompt(PromptKind::MappingGenerate, &PromptInputs::default()).unwrap_err();
    assert!(err.to_string().contains("document"));
    let err = build_prompt(PromptKind::SchemaModify, &PromptInputs {
        description: Some("x".into()),
        ..Default::default()
    })
    .unwrap_err();
    assert!(err.to_string().contains("schema"));
}
