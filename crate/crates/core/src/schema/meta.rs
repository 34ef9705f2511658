use super::validate::{compile_pattern, ref_target_path};
use super::{ValidationReport, Violation, TYPE_NAMES};
use crate::document::{resolve_path, DataNode, DocPath};

/// Structural check of a candidate schema: legal type names, well-formed
/// `required`, schema-valued keywords holding schemas, internal `$ref`s that
/// resolve, and patterns that compile. Problems are reported, never raised.
pub fn validate_schema(candidate: &DataNode) -> ValidationReport {
    let mut checker = MetaChecker {
        root: candidate,
        out: Vec::new(),
    };
    checker.schema(candidate, &mut DocPath::root());
    ValidationReport::from_violations(checker.out)
}

struct MetaChecker<'a> {
    root: &'a DataNode,
    out: Vec<Violation>,
}

fn is_schema(node: &DataNode) -> bool {
    matches!(node, DataNode::Object(_) | DataNode::Bool(_))
}

impl MetaChecker<'_> {
    fn report(&mut self, path: &DocPath, keyword: &str, message: String) {
        self.out.push(Violation {
            instance_path: path.clone(),
            schema_path: path.clone(),
            keyword: keyword.to_string(),
            message,
        });
    }

    fn schema(&mut self, node: &DataNode, path: &mut DocPath) {
        let map = match node {
            DataNode::Bool(_) => return,
            DataNode::Object(map) => map,
            other => {
                self.report(
                    path,
                    "schema",
                    format!("a schema must be an object or boolean, found {}", other.kind().name()),
                );
                return;
            }
        };

        for (keyword, value) in map {
            path.push(keyword.as_str());
            match keyword.as_str() {
                "type" => self.type_keyword(value, path),
                "required" => self.required(value, path),
                "properties" | "patternProperties" | "$defs" => {
                    self.schema_map(keyword, value, path)
                }
                "items" | "additionalProperties" => {
                    if is_schema(value) {
                        self.schema(value, path);
                    } else {
                        let hint = if keyword == "items" && value.as_array().is_some() {
                            " (the array form is not part of 2020-12; use prefixItems)"
                        } else {
                            ""
                        };
                        self.report(path, keyword, format!("`{keyword}` must be a schema{hint}"));
                    }
                }
                "anyOf" | "oneOf" | "allOf" => match value {
                    DataNode::Array(branches) if !branches.is_empty() => {
                        for (i, b) in branches.iter().enumerate() {
                            path.push(i);
                            self.schema(b, path);
                            path.segments.pop();
                        }
                    }
                    _ => self.report(
                        path,
                        keyword,
                        format!("`{keyword}` must be a non-empty array of schemas"),
                    ),
                },
                "enum" => {
                    if value.as_array().is_none() {
                        self.report(path, keyword, "`enum` must be an array".into());
                    }
                }
                "$ref" => self.reference(value, path),
                "minimum" | "maximum" => {
                    if value.as_number().is_none() {
                        self.report(path, keyword, format!("`{keyword}` must be a number"));
                    }
                }
                "minLength" | "maxLength" => {
                    let ok = value
                        .as_number()
                        .is_some_and(|n| n.is_integral() && !n.is_negative());
                    if !ok {
                        self.report(
                            path,
                            keyword,
                            format!("`{keyword}` must be a non-negative integer"),
                        );
                    }
                }
                "pattern" => match value {
                    DataNode::String(p) => self.pattern(p, path, keyword),
                    _ => self.report(path, keyword, "`pattern` must be a string".into()),
                },
                "title" | "description" | "format" | "$schema" | "$id" | "$comment" => {
                    if value.as_str().is_none() {
                        self.report(path, keyword, format!("`{keyword}` must be a string"));
                    }
                }
                _ => {}
            }
            path.segments.pop();
        }
    }

    fn type_keyword(&mut self, value: &DataNode, path: &DocPath) {
        let names: Vec<&DataNode> = match value {
            DataNode::Array(items) if !items.is_empty() => items.iter().collect(),
            DataNode::String(_) => vec![value],
            _ => {
                self.report(
                    path,
                    "type",
                    "`type` must be a type name or a non-empty list of type names".into(),
                );
                return;
            }
        };
        let mut seen = Vec::new();
        for name in names {
            match name.as_str() {
                Some(n) if TYPE_NAMES.contains(&n) => {
                    if seen.contains(&n) {
                        self.report(path, "type", format!("duplicate type name `{n}`"));
                    }
                    seen.push(n);
                }
                Some(n) => self.report(
                    path,
                    "type",
                    format!(
                        "unknown type name `{n}`; expected one of {}",
                        TYPE_NAMES.join(", ")
                    ),
                ),
                None => self.report(path, "type", "type names must be strings".into()),
            }
        }
    }

    fn required(&mut self, value: &DataNode, path: &DocPath) {
        let Some(items) = value.as_array() else {
            self.report(path, "required", "`required` must be an array of strings".into());
            return;
        };
        let mut seen: Vec<&str> = Vec::new();
        for item in items {
            match item.as_str() {
                Some(s) if seen.contains(&s) => {
                    self.report(path, "required", format!("duplicate required entry `{s}`"))
                }
                Some(s) => seen.push(s),
                None => self.report(path, "required", "`required` entries must be strings".into()),
            }
        }
    }

    fn schema_map(&mut self, keyword: &str, value: &DataNode, path: &mut DocPath) {
        let Some(map) = value.as_object() else {
            self.report(path, keyword, format!("`{keyword}` must be an object of schemas"));
            return;
        };
        for (name, sub) in map {
            if keyword == "patternProperties" {
                self.pattern(name, path, keyword);
            }
            path.push(name.as_str());
            self.schema(sub, path);
            path.segments.pop();
        }
    }

    fn pattern(&mut self, pattern: &str, path: &DocPath, keyword: &str) {
        if let Err(e) = compile_pattern(pattern) {
            let first_line = e.to_string().lines().last().unwrap_or("").trim().to_string();
            self.report(
                path,
                keyword,
                format!("pattern `{pattern}` is not supported: {first_line}"),
            );
        }
    }

    fn reference(&mut self, value: &DataNode, path: &DocPath) {
        let Some(reference) = value.as_str() else {
            self.report(path, "$ref", "`$ref` must be a string".into());
            return;
        };
        if !reference.starts_with('#') {
            self.report(
                path,
                "$ref",
                format!("remote reference `{reference}` is not supported; only internal `#/...` references"),
            );
            return;
        }
        let resolves = ref_target_path(reference)
            .and_then(|p| resolve_path(self.root, &p).ok())
            .is_some_and(is_schema);
        if !resolves {
            self.report(path, "$ref", format!("dangling reference `{reference}`"));
        }
    }
}
