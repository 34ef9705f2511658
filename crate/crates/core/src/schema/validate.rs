use std::cell::RefCell;
use std::collections::HashMap;

use regex::Regex;

use super::{SchemaNode, ValidationReport, Violation};
use crate::document::{resolve_path, DataNode, DocPath, Number};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemaError {
    #[error("unresolvable $ref `{0}`")]
    UnresolvableRef(String),
    #[error("$ref `{0}` loops without consuming any instance data")]
    RefCycle(String),
    #[error("invalid pattern `{pattern}`: {message}")]
    InvalidPattern { pattern: String, message: String },
}

const MAX_DEPTH: usize = 2048;

/// Validates `doc` against `schema`, collecting every violation of the
/// supported keywords. Schema problems that make validation impossible (a
/// dangling `$ref`) are errors, not violations.
pub fn validate_instance(
    doc: &DataNode,
    schema: &SchemaNode,
) -> Result<ValidationReport, SchemaError> {
    let validator = Validator {
        root: schema.as_node(),
        regexes: RefCell::new(HashMap::new()),
        ref_stack: RefCell::new(Vec::new()),
    };
    let mut out = Vec::new();
    validator.check(
        doc,
        &mut DocPath::root(),
        schema.as_node(),
        &mut DocPath::root(),
        &mut out,
    )?;
    Ok(ValidationReport::from_violations(out))
}

struct Validator<'s> {
    root: &'s DataNode,
    regexes: RefCell<HashMap<String, Regex>>,
    // (reference, address of the instance node) pairs currently being expanded
    ref_stack: RefCell<Vec<(String, usize)>>,
}

pub(crate) fn ref_target_path(reference: &str) -> Option<DocPath> {
    let fragment = reference.strip_prefix('#')?;
    DocPath::from_pointer(fragment).ok()
}

pub(crate) fn compile_pattern(pattern: &str) -> Result<Regex, regex::Error> {
    Regex::new(pattern)
}

pub(crate) fn type_matches(name: &str, inst: &DataNode) -> bool {
    match (name, inst) {
        ("null", DataNode::Null) => true,
        ("boolean", DataNode::Bool(_)) => true,
        ("number", DataNode::Number(_)) => true,
        ("integer", DataNode::Number(n)) => n.is_integral(),
        ("string", DataNode::String(_)) => true,
        ("array", DataNode::Array(_)) => true,
        ("object", DataNode::Object(_)) => true,
        _ => false,
    }
}

impl<'s> Validator<'s> {
    fn regex(&self, pattern: &str) -> Result<Regex, SchemaError> {
        if let Some(r) = self.regexes.borrow().get(pattern) {
            return Ok(r.clone());
        }
        let r = compile_pattern(pattern).map_err(|e| SchemaError::InvalidPattern {
            pattern: pattern.to_string(),
            message: e.to_string(),
        })?;
        self.regexes
            .borrow_mut()
            .insert(pattern.to_string(), r.clone());
        Ok(r)
    }

    fn violation(
        &self,
        out: &mut Vec<Violation>,
        inst_path: &DocPath,
        schema_path: &DocPath,
        keyword: &str,
        message: String,
    ) {
        out.push(Violation {
            instance_path: inst_path.clone(),
            schema_path: schema_path.child(keyword),
            keyword: keyword.to_string(),
            message,
        });
    }

    fn is_valid(
        &self,
        inst: &DataNode,
        inst_path: &mut DocPath,
        schema: &DataNode,
        schema_path: &mut DocPath,
    ) -> Result<bool, SchemaError> {
        let mut scratch = Vec::new();
        self.check(inst, inst_path, schema, schema_path, &mut scratch)?;
        Ok(scratch.is_empty())
    }

    fn check(
        &self,
        inst: &DataNode,
        inst_path: &mut DocPath,
        schema: &DataNode,
        schema_path: &mut DocPath,
        out: &mut Vec<Violation>,
    ) -> Result<(), SchemaError> {
        if inst_path.len() + schema_path.len() > MAX_DEPTH {
            return Err(SchemaError::RefCycle(schema_path.to_pointer()));
        }
        let map = match schema {
            DataNode::Bool(true) => return Ok(()),
            DataNode::Bool(false) => {
                out.push(Violation {
                    instance_path: inst_path.clone(),
                    schema_path: schema_path.clone(),
                    keyword: "false".into(),
                    message: "no value is allowed here".into(),
                });
                return Ok(());
            }
            DataNode::Object(map) => map,
            _ => return Ok(()),
        };

        if let Some(DataNode::String(reference)) = map.get("$ref") {
            self.check_ref(reference, inst, inst_path, out)?;
        }

        if let Some(ty) = map.get("type") {
            let names: Vec<&str> = match ty {
                DataNode::String(s) => vec![s.as_str()],
                DataNode::Array(items) => items.iter().filter_map(DataNode::as_str).collect(),
                _ => vec![],
            };
            if !names.is_empty() && !names.iter().any(|n| type_matches(n, inst)) {
                self.violation(
                    out,
                    inst_path,
                    schema_path,
                    "type",
                    format!(
                        "expected {}, found {}",
                        names.join(" or "),
                        inst.kind().name()
                    ),
                );
            }
        }

        if let Some(DataNode::Array(options)) = map.get("enum") {
            if !options.iter().any(|o| o.value_eq(inst)) {
                self.violation(
                    out,
                    inst_path,
                    schema_path,
                    "enum",
                    format!("{inst} is not one of the allowed values"),
                );
            }
        }

        if let Some(expected) = map.get("const") {
            if !expected.value_eq(inst) {
                self.violation(
                    out,
                    inst_path,
                    schema_path,
                    "const",
                    format!("expected {expected}"),
                );
            }
        }

        match inst {
            DataNode::Object(obj) => self.check_object(obj, map, inst_path, schema_path, out)?,
            DataNode::Array(items) => {
                if let Some(item_schema) = map.get("items") {
                    if matches!(item_schema, DataNode::Object(_) | DataNode::Bool(_)) {
                        schema_path.push("items");
                        for (i, item) in items.iter().enumerate() {
                            inst_path.push(i);
                            let r = self.check(item, inst_path, item_schema, schema_path, out);
                            inst_path.segments.pop();
                            r?;
                        }
                        schema_path.segments.pop();
                    }
                }
            }
            DataNode::String(s) => self.check_string(s, map, inst_path, schema_path, out)?,
            DataNode::Number(n) => self.check_number(n, map, inst_path, schema_path, out),
            _ => {}
        }

        for keyword in ["allOf", "anyOf", "oneOf"] {
            let Some(DataNode::Array(branches)) = map.get(keyword) else {
                continue;
            };
            schema_path.push(keyword);
            let mut valid_count = 0;
            let mut all_of_failures = Vec::new();
            for (i, branch) in branches.iter().enumerate() {
                schema_path.push(i);
                let result = if keyword == "allOf" {
                    self.check(inst, inst_path, branch, schema_path, &mut all_of_failures)
                        .map(|_| true)
                } else {
                    self.is_valid(inst, inst_path, branch, schema_path)
                };
                schema_path.segments.pop();
                if result? {
                    valid_count += 1;
                }
            }
            schema_path.segments.pop();
            match keyword {
                "allOf" => out.extend(all_of_failures),
                "anyOf" if valid_count == 0 => self.violation(
                    out,
                    inst_path,
                    schema_path,
                    keyword,
                    "value does not match any anyOf branch".into(),
                ),
                "oneOf" if valid_count != 1 => self.violation(
                    out,
                    inst_path,
                    schema_path,
                    keyword,
                    format!("value matches {valid_count} oneOf branches, expected exactly 1"),
                ),
                _ => {}
            }
        }
        Ok(())
    }

    fn check_ref(
        &self,
        reference: &str,
        inst: &DataNode,
        inst_path: &mut DocPath,
        out: &mut Vec<Violation>,
    ) -> Result<(), SchemaError> {
        let target_path = ref_target_path(reference)
            .ok_or_else(|| SchemaError::UnresolvableRef(reference.to_string()))?;
        let target = resolve_path(self.root, &target_path)
            .map_err(|_| SchemaError::UnresolvableRef(reference.to_string()))?;
        let key = (reference.to_string(), inst as *const DataNode as usize);
        if self.ref_stack.borrow().contains(&key) {
            return Err(SchemaError::RefCycle(reference.to_string()));
        }
        self.ref_stack.borrow_mut().push(key);
        let mut target_schema_path = target_path;
        let result = self.check(inst, inst_path, target, &mut target_schema_path, out);
        self.ref_stack.borrow_mut().pop();
        result
    }

    fn check_object(
        &self,
        obj: &crate::document::Map,
        map: &crate::document::Map,
        inst_path: &mut DocPath,
        schema_path: &mut DocPath,
        out: &mut Vec<Violation>,
    ) -> Result<(), SchemaError> {
        if let Some(DataNode::Array(required)) = map.get("required") {
            for name in required.iter().filter_map(DataNode::as_str) {
                if !obj.contains_key(name) {
                    self.violation(
                        out,
                        inst_path,
                        schema_path,
                        "required",
                        format!("missing required property `{name}`"),
                    );
                }
            }
        }

        let properties = map.get("properties").and_then(DataNode::as_object);
        let patterns = map.get("patternProperties").and_then(DataNode::as_object);
        let additional = map.get("additionalProperties");

        for (key, value) in obj {
            let mut matched = false;
            if let Some(sub) = properties.and_then(|p| p.get(key)) {
                matched = true;
                schema_path.push("properties");
                schema_path.push(key.as_str());
                inst_path.push(key.as_str());
                let r = self.check(value, inst_path, sub, schema_path, out);
                inst_path.segments.pop();
                schema_path.segments.truncate(schema_path.len() - 2);
                r?;
            }
            if let Some(patterns) = patterns {
                for (pattern, sub) in patterns {
                    if self.regex(pattern)?.is_match(key) {
                        matched = true;
                        schema_path.push("patternProperties");
                        schema_path.push(pattern.as_str());
                        inst_path.push(key.as_str());
                        let r = self.check(value, inst_path, sub, schema_path, out);
                        inst_path.segments.pop();
                        schema_path.segments.truncate(schema_path.len() - 2);
                        r?;
                    }
                }
            }
            if !matched {
                if let Some(extra) = additional {
                    schema_path.push("additionalProperties");
                    inst_path.push(key.as_str());
                    let r = match extra {
                        DataNode::Bool(false) => {
                            out.push(Violation {
                                instance_path: inst_path.clone(),
                                schema_path: schema_path.clone(),
                                keyword: "additionalProperties".into(),
                                message: format!("property `{key}` is not allowed"),
                            });
                            Ok(())
                        }
                        other => self.check(value, inst_path, other, schema_path, out),
                    };
                    inst_path.segments.pop();
                    schema_path.segments.pop();
                    r?;
                }
            }
        }
        Ok(())
    }

    fn check_string(
        &self,
        s: &str,
        map: &crate::document::Map,
        inst_path: &DocPath,
        schema_path: &DocPath,
        out: &mut Vec<Violation>,
    ) -> Result<(), SchemaError> {
        let len = s.chars().count();
        if let Some(min) = map.get("minLength").and_then(limit) {
            if (len as u64) < min {
                self.violation(
                    out,
                    inst_path,
                    schema_path,
                    "minLength",
                    format!("string of length {len} is shorter than {min}"),
                );
            }
        }
        if let Some(max) = map.get("maxLength").and_then(limit) {
            if (len as u64) > max {
                self.violation(
                    out,
                    inst_path,
                    schema_path,
                    "maxLength",
                    format!("string of length {len} is longer than {max}"),
                );
            }
        }
        if let Some(DataNode::String(pattern)) = map.get("pattern") {
            if !self.regex(pattern)?.is_match(s) {
                self.violation(
                    out,
                    inst_path,
                    schema_path,
                    "pattern",
                    format!("string does not match pattern `{pattern}`"),
                );
            }
        }
        Ok(())
    }

    fn check_number(
        &self,
        n: &Number,
        map: &crate::document::Map,
        inst_path: &DocPath,
        schema_path: &DocPath,
        out: &mut Vec<Violation>,
    ) {
        if let Some(DataNode::Number(min)) = map.get("minimum") {
            if n.numeric_cmp(min).is_lt() {
                self.violation(
                    out,
                    inst_path,
                    schema_path,
                    "minimum",
                    format!("{n} is less than the minimum {min}"),
                );
            }
        }
        if let Some(DataNode::Number(max)) = map.get("maximum") {
            if n.numeric_cmp(max).is_gt() {
                self.violation(
                    out,
                    inst_path,
                    schema_path,
                    "maximum",
                    format!("{n} is greater than the maximum {max}"),
                );
            }
        }
    }
}

fn limit(node: &DataNode) -> Option<u64> {
    let n = node.as_number()?;
    if n.is_negative() || !n.is_integral() {
        return None;
    }
    n.to_i64().map(|v| v as u64).or(Some(u64::MAX))
}
