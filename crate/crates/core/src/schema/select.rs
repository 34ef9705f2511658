use std::collections::BTreeSet;

use super::{validate_schema, SchemaNode, ValidationReport};
use crate::document::{resolve_path, resolve_path_mut, DataNode, DocPath, Map, PathNotFound};

const DEFS_PREFIX: &str = "#/$defs/";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SelectError {
    #[error(transparent)]
    NotFound(#[from] PathNotFound),
    #[error("node at {0} is not a schema")]
    NotASchema(DocPath),
    #[error("reference `{0}` cannot be carried into a standalone sub-schema")]
    Unmaterializable(String),
    #[error("reference `{0}` points to a missing definition")]
    DanglingRef(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MergeError {
    #[error(transparent)]
    NotFound(#[from] PathNotFound),
    #[error("replacement schema is invalid:\n{0}")]
    InvalidReplacement(ValidationReport),
    #[error("merged schema is invalid:\n{0}")]
    InvalidResult(ValidationReport),
}

/// Definition name targeted by a `#/$defs/<name>[/...]` reference.
fn def_name(reference: &str) -> Option<String> {
    let rest = reference.strip_prefix(DEFS_PREFIX)?;
    let raw = rest.split('/').next().unwrap_or(rest);
    Some(raw.replace("~1", "/").replace("~0", "~"))
}

fn escape(name: &str) -> String {
    name.replace('~', "~0").replace('/', "~1")
}

fn collect_refs(node: &DataNode, out: &mut Vec<String>) {
    match node {
        DataNode::Object(map) => {
            for (k, v) in map {
                match (k.as_str(), v) {
                    ("$ref", DataNode::String(r)) => out.push(r.clone()),
                    _ => collect_refs(v, out),
                }
            }
        }
        DataNode::Array(items) => items.iter().for_each(|i| collect_refs(i, out)),
        _ => {}
    }
}

/// Extracts the sub-schema at `path` as a standalone schema: the node itself
/// plus every `$defs` entry it reaches, transitively. Reference cycles are
/// preserved.
pub fn select_subschema(schema: &SchemaNode, path: &DocPath) -> Result<SchemaNode, SelectError> {
    if path.is_root() {
        return Ok(schema.clone());
    }
    let root = schema.as_node();
    let selected = resolve_path(root, path)?;
    if !matches!(selected, DataNode::Object(_) | DataNode::Bool(_)) {
        return Err(SelectError::NotASchema(path.clone()));
    }
    let root_defs = root.get("$defs").and_then(DataNode::as_object);

    let mut needed: BTreeSet<String> = BTreeSet::new();
    let mut queue = Vec::new();
    collect_refs(selected, &mut queue);
    while let Some(reference) = queue.pop() {
        let name = def_name(&reference).ok_or_else(|| SelectError::Unmaterializable(reference.clone()))?;
        if needed.contains(&name) {
            continue;
        }
        let def = root_defs
            .and_then(|d| d.get(&name))
            .ok_or_else(|| SelectError::DanglingRef(reference.clone()))?;
        needed.insert(name);
        collect_refs(def, &mut queue);
    }

    let mut out = selected.clone();
    if needed.is_empty() {
        return Ok(SchemaNode::new(out));
    }
    let root_defs = root_defs.expect("needed definitions exist");
    let map = out
        .as_object_mut()
        .expect("a schema with references is an object");
    let defs = map
        .entry("$defs".to_string())
        .or_insert_with(DataNode::empty_object);
    let defs = match defs {
        DataNode::Object(d) => d,
        _ => return Err(SelectError::NotASchema(path.child("$defs"))),
    };
    for (name, def) in root_defs {
        if needed.contains(name) {
            match defs.get(name) {
                Some(existing) if existing != def => {
                    return Err(SelectError::Unmaterializable(format!("{DEFS_PREFIX}{}", escape(name))))
                }
                Some(_) => {}
                None => {
                    defs.insert(name.clone(), def.clone());
                }
            }
        }
    }
    Ok(SchemaNode::new(out))
}

fn rewrite_refs(node: &mut DataNode, renames: &[(String, String)]) {
    match node {
        DataNode::Object(map) => {
            for (k, v) in map.iter_mut() {
                if k == "$ref" {
                    if let DataNode::String(r) = v {
                        if let Some(name) = def_name(r) {
                            if let Some((_, new)) = renames.iter().find(|(old, _)| *old == name) {
                                let old_prefix = format!("{DEFS_PREFIX}{}", escape(&name));
                                let tail = &r[old_prefix.len()..];
                                *r = format!("{DEFS_PREFIX}{}{tail}", escape(new));
                            }
                        }
                    }
                } else {
                    rewrite_refs(v, renames);
                }
            }
        }
        DataNode::Array(items) => items.iter_mut().for_each(|i| rewrite_refs(i, renames)),
        _ => {}
    }
}

/// Replaces the sub-schema at `path`. Definitions carried by the replacement
/// are hoisted into the root `$defs`; a name already bound to a different
/// definition gets a numeric suffix (`compound` becomes `compound2`) and the
/// replacement's references are rewritten to match.
pub fn merge_subschema(
    schema: &SchemaNode,
    path: &DocPath,
    replacement: &SchemaNode,
) -> Result<SchemaNode, MergeError> {
    let replacement_report = validate_schema(replacement.as_node());
    if !replacement_report.valid {
        return Err(MergeError::InvalidReplacement(replacement_report));
    }
    if path.is_root() {
        return Ok(replacement.clone());
    }
    resolve_path(schema.as_node(), path)?;

    let mut body = replacement.as_node().clone();
    let carried: Map = match body.as_object_mut().and_then(|m| m.shift_remove("$defs")) {
        Some(DataNode::Object(defs)) => defs,
        _ => Map::new(),
    };

    let mut result = schema.as_node().clone();
    let existing: Map = result
        .get("$defs")
        .and_then(DataNode::as_object)
        .cloned()
        .unwrap_or_default();

    let mut renames: Vec<(String, String)> = Vec::new();
    let mut taken: BTreeSet<String> = existing.keys().cloned().collect();
    taken.extend(carried.keys().cloned());
    let mut targets: Vec<(String, String)> = Vec::new();
    for (name, def) in &carried {
        match existing.get(name) {
            None => targets.push((name.clone(), name.clone())),
            Some(current) if current == def => {}
            Some(_) => {
                let mut suffix = 2;
                let fresh = loop {
                    let candidate = format!("{name}{suffix}");
                    if !taken.contains(&candidate) {
                        break candidate;
                    }
                    suffix += 1;
                };
                taken.insert(fresh.clone());
                renames.push((name.clone(), fresh.clone()));
                targets.push((name.clone(), fresh));
            }
        }
    }

    rewrite_refs(&mut body, &renames);
    let target = resolve_path_mut(&mut result, path)?;
    *target = body;

    if !targets.is_empty() {
        let root = result
            .as_object_mut()
            .expect("a root with a resolvable non-empty path is an object");
        let defs = root
            .entry("$defs".to_string())
            .or_insert_with(DataNode::empty_object);
        if let DataNode::Object(defs) = defs {
            for (old, new) in targets {
                let mut def = carried[&old].clone();
                rewrite_refs(&mut def, &renames);
                defs.insert(new, def);
            }
        }
    }

    let report = validate_schema(&result);
    if !report.valid {
        return Err(MergeError::InvalidResult(report));
    }
    Ok(SchemaNode::new(result))
}
