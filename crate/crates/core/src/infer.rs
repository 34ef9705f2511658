//! Schema inference from a single document instance.
//!
//! Scalars map to their JSON type (integer-flagged numbers to `integer`).
//! Objects list their properties; array items are unified with
//! [`merge_schemas`]. No string formats or enums are inferred, so CSV cells
//! such as `yes`/`no` come out as plain strings.

use serde::{Deserialize, Serialize};

use crate::document::{DataNode, Map};
use crate::schema::SchemaNode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RequiredMode {
    /// Every property observed on any sibling object is required.
    AllPresent,
    /// Only properties present on every sibling object are required.
    #[default]
    Intersection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferenceOptions {
    pub detect_integer: bool,
    pub required_mode: RequiredMode,
    pub merge_array_items: bool,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        InferenceOptions {
            detect_integer: true,
            required_mode: RequiredMode::Intersection,
            merge_array_items: true,
        }
    }
}

pub fn infer_schema(doc: &DataNode, opts: &InferenceOptions) -> SchemaNode {
    SchemaNode::new(infer_node(doc, opts))
}

fn type_schema(name: &str) -> DataNode {
    let mut m = Map::new();
    m.insert("type".into(), DataNode::from(name));
    DataNode::Object(m)
}

fn infer_node(doc: &DataNode, opts: &InferenceOptions) -> DataNode {
    match doc {
        DataNode::Null => type_schema("null"),
        DataNode::Bool(_) => type_schema("boolean"),
        DataNode::Number(n) if opts.detect_integer && n.is_integer() => type_schema("integer"),
        DataNode::Number(_) => type_schema("number"),
        DataNode::String(_) => type_schema("string"),
        DataNode::Array(items) => {
            let mut schema = type_schema("array");
            let mut merged: Option<DataNode> = None;
            for item in items {
                let s = infer_node(item, opts);
                merged = Some(match merged {
                    None => s,
                    Some(acc) if opts.merge_array_items => merge_nodes(&acc, &s, opts.required_mode),
                    Some(acc) => union_without_merging(acc, s),
                });
            }
            if let (Some(items_schema), DataNode::Object(m)) = (merged, &mut schema) {
                m.insert("items".into(), items_schema);
            }
            schema
        }
        DataNode::Object(map) => {
            let mut schema = type_schema("object");
            if map.is_empty() {
                return schema;
            }
            let mut props = Map::with_capacity(map.len());
            for (k, v) in map {
                props.insert(k.clone(), infer_node(v, opts));
            }
            let required = map.keys().map(|k| DataNode::from(k.as_str())).collect();
            if let DataNode::Object(m) = &mut schema {
                m.insert("properties".into(), DataNode::Object(props));
                m.insert("required".into(), DataNode::Array(required));
            }
            schema
        }
    }
}

fn union_without_merging(acc: DataNode, next: DataNode) -> DataNode {
    let mut branches = branches_of(&acc);
    if !branches.contains(&next) {
        branches.push(next);
    }
    from_branches(branches)
}

/// Unifies two inferred schemas into one that accepts every instance either
/// accepts: same types merge structurally, `integer` widens into `number`,
/// and anything else becomes an `anyOf` without duplicate branches.
pub fn merge_schemas(a: &SchemaNode, b: &SchemaNode) -> SchemaNode {
    SchemaNode::new(merge_nodes(a.as_node(), b.as_node(), RequiredMode::Intersection))
}

pub fn merge_schemas_with(a: &SchemaNode, b: &SchemaNode, mode: RequiredMode) -> SchemaNode {
    SchemaNode::new(merge_nodes(a.as_node(), b.as_node(), mode))
}

fn branches_of(schema: &DataNode) -> Vec<DataNode> {
    match schema.get("anyOf") {
        Some(DataNode::Array(items)) => items.clone(),
        _ => vec![schema.clone()],
    }
}

fn from_branches(mut branches: Vec<DataNode>) -> DataNode {
    if branches.len() == 1 {
        return branches.pop().expect("one branch");
    }
    let mut m = Map::new();
    m.insert("anyOf".into(), DataNode::Array(branches));
    DataNode::Object(m)
}

fn type_of(schema: &DataNode) -> Option<&str> {
    schema.get("type").and_then(DataNode::as_str)
}

fn compatible(a: Option<&str>, b: Option<&str>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => {
            x == y || matches!((x, y), ("integer", "number") | ("number", "integer"))
        }
        _ => false,
    }
}

fn merge_nodes(a: &DataNode, b: &DataNode, mode: RequiredMode) -> DataNode {
    if a == b {
        return a.clone();
    }
    let mut branches = branches_of(a);
    for incoming in branches_of(b) {
        let slot = branches
            .iter()
            .position(|existing| compatible(type_of(existing), type_of(&incoming)));
        match slot {
            Some(i) => branches[i] = merge_same_kind(&branches[i], &incoming, mode),
            None => {
                if !branches.contains(&incoming) {
                    branches.push(incoming);
                }
            }
        }
    }
    let mut unique: Vec<DataNode> = Vec::with_capacity(branches.len());
    for branch in branches {
        if !unique.contains(&branch) {
            unique.push(branch);
        }
    }
    from_branches(unique)
}

fn merge_same_kind(a: &DataNode, b: &DataNode, mode: RequiredMode) -> DataNode {
    match (type_of(a), type_of(b)) {
        (Some("integer"), Some("number")) | (Some("number"), Some("integer")) => {
            type_schema("number")
        }
        (Some("object"), Some("object")) => merge_objects(a, b, mode),
        (Some("array"), Some("array")) => {
            let mut out = type_schema("array");
            let items = match (a.get("items"), b.get("items")) {
                (Some(x), Some(y)) => Some(merge_nodes(x, y, mode)),
                (Some(x), None) | (None, Some(x)) => Some(x.clone()),
                (None, None) => None,
            };
            if let (Some(items), DataNode::Object(m)) = (items, &mut out) {
                m.insert("items".into(), items);
            }
            out
        }
        _ => a.clone(),
    }
}

fn merge_objects(a: &DataNode, b: &DataNode, mode: RequiredMode) -> DataNode {
    let empty = Map::new();
    let pa = a.get("properties").and_then(DataNode::as_object).unwrap_or(&empty);
    let pb = b.get("properties").and_then(DataNode::as_object).unwrap_or(&empty);
    let mut props = Map::with_capacity(pa.len().max(pb.len()));
    for (k, va) in pa {
        let merged = match pb.get(k) {
            Some(vb) => merge_nodes(va, vb, mode),
            None => va.clone(),
        };
        props.insert(k.clone(), merged);
    }
    for (k, vb) in pb {
        if !props.contains_key(k) {
            props.insert(k.clone(), vb.clone());
        }
    }

    let names = |s: &DataNode| -> Vec<String> {
        s.get("required")
            .and_then(DataNode::as_array)
            .map(|r| r.iter().filter_map(|x| x.as_str().map(str::to_string)).collect())
            .unwrap_or_default()
    };
    let ra = names(a);
    let rb = names(b);
    let required: Vec<String> = match mode {
        RequiredMode::Intersection => ra.into_iter().filter(|k| rb.contains(k)).collect(),
        RequiredMode::AllPresent => {
            let mut all = ra;
            for k in rb {
                if !all.contains(&k) {
                    all.push(k);
                }
            }
            all
        }
    };

    let mut out = type_schema("object");
    if let DataNode::Object(m) = &mut out {
        if !props.is_empty() {
            m.insert("properties".into(), DataNode::Object(props));
        }
        if !required.is_empty() {
            m.insert(
                "required".into(),
                DataNode::Array(required.into_iter().map(DataNode::from).collect()),
            );
        }
    }
    out
}
