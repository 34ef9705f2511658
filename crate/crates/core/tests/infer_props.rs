mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use schemaforge_core::document::{node, serialize_json, DataNode, Map, Number};
use schemaforge_core::infer::{infer_schema, merge_schemas, InferenceOptions, RequiredMode};
use schemaforge_core::schema::{validate_instance, validate_schema, SchemaNode};

fn valid(doc: &DataNode, schema: &SchemaNode) -> bool {
    validate_instance(doc, schema).expect("inferred schemas have no refs").valid
}

#[test]
fn five_hundred_documents_validate_against_their_schema() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1f3e);
    let unmerged = InferenceOptions {
        merge_array_items: false,
        ..InferenceOptions::default()
    };
    let floats = InferenceOptions {
        detect_integer: false,
        ..InferenceOptions::default()
    };
    for i in 0..500 {
        let doc = common::varied(&mut rng, 0);
        let schema = infer_schema(&doc, &InferenceOptions::default());
        assert!(valid(&doc, &schema), "case {i}: {}", serialize_json(&doc, true));
        assert!(validate_schema(schema.as_node()).valid, "case {i}");
        assert_eq!(schema, infer_schema(&doc, &InferenceOptions::default()));
        assert!(valid(&doc, &infer_schema(&doc, &unmerged)), "case {i}");
        assert!(valid(&doc, &infer_schema(&doc, &floats)), "case {i}");
    }
}

#[test]
fn yes_no_column_stays_string() {
    let doc = node(r#"[{"product_purity":"yes"},{"product_purity":"no"}]"#);
    let s = infer_schema(&doc, &InferenceOptions::default());
    assert_eq!(
        s.as_node(),
        &node(
            r#"{"type":"array","items":{"type":"object","properties":{"product_purity":{"type":"string"}},"required":["product_purity"]}}"#
        )
    );
}

#[test]
fn all_present_requires_union_of_keys() {
    let doc = node(r#"[{"a":1},{"a":2,"b":3}]"#);
    let opts = InferenceOptions {
        required_mode: RequiredMode::AllPresent,
        ..InferenceOptions::default()
    };
    let s = infer_schema(&doc, &opts);
    assert_eq!(s.keyword("items").unwrap().get("required").unwrap(), &node(r#"["a","b"]"#));
    // Sparse rows then fail their own schema, which is why it is not the default.
    assert!(!valid(&doc, &s));
}

/// Sorts every `anyOf` and `required` list, which are order-free.
fn canonical(d: &DataNode) -> DataNode {
    match d {
        DataNode::Object(m) => {
            let mut out = Map::new();
            for (k, v) in m {
                let mut v = canonical(v);
                if k == "anyOf" || k == "required" {
                    if let DataNode::Array(items) = &mut v {
                        items.sort_by_key(|x| serialize_json(x, true));
                    }
                }
                out.insert(k.clone(), v);
            }
            DataNode::Object(out)
        }
        DataNode::Array(items) => DataNode::Array(items.iter().map(canonical).collect()),
        other => other.clone(),
    }
}

fn arb_doc() -> impl Strategy<Value = DataNode> {
    let leaf = prop_oneof![
        Just(DataNode::Null),
        any::<bool>().prop_map(DataNode::Bool),
        any::<i32>().prop_map(|i| DataNode::Number(Number::from_i64(i.into()))),
        (-1000i32..1000, 1u32..99).prop_map(|(a, b)| DataNode::Number(Number::parse(&format!("{a}.{b}")).unwrap())),
        "(yes|no|[a-z]{0,4})".prop_map(DataNode::String),
    ];
    leaf.prop_recursive(4, 64, 6, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..6).prop_map(DataNode::Array),
            prop::collection::vec(("[a-c]", inner), 0..5)
                .prop_map(|kv| DataNode::Object(kv.into_iter().collect::<Map>())),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn inferred_schema_accepts_its_document(doc in arb_doc()) {
        let s = infer_schema(&doc, &InferenceOptions::default());
        prop_assert!(valid(&doc, &s));
        if let (DataNode::Array(items), Some(item_schema)) = (&doc, s.keyword("items")) {
            let item_schema = SchemaNode::new(item_schema.clone());
            for x in items {
                prop_assert!(valid(x, &item_schema));
            }
        }
    }

    #[test]
    fn merge_accepts_both_sides(a in arb_doc(), b in arb_doc()) {
        let opts = InferenceOptions::default();
        let (sa, sb) = (infer_schema(&a, &opts), infer_schema(&b, &opts));
        let m = merge_schemas(&sa, &sb);
        prop_assert!(valid(&a, &m));
        prop_assert!(valid(&b, &m));
        prop_assert_eq!(canonical(m.as_node()), canonical(merge_schemas(&sb, &sa).as_node()));
        prop_assert_eq!(&merge_schemas(&sa, &sa), &sa);
    }
}
