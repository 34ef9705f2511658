//! JSON Schema (Draft 2020-12 subset).
//!
//! Supported validation keywords: `type`, `properties`, `required`, `items`,
//! `enum`, `const`, `anyOf`, `oneOf`, `allOf`, `$ref` (internal only),
//! `$defs`, `additionalProperties`, `patternProperties`, `minimum`,
//! `maximum`, `minLength`, `maxLength`, `pattern`. `title`, `description` and
//! `format` are annotations. Any other keyword is kept verbatim and ignored.
//!
//! Patterns use the regex dialect shared by mainstream engines: no
//! lookaround and no backreferences.

mod meta;
mod select;
mod validate;

use serde::{Deserialize, Serialize};

use crate::document::{parse_json, serialize_json, DataNode, DocPath, JsonSyntaxError};

pub use self::meta::validate_schema;
pub use self::select::{merge_subschema, select_subschema, MergeError, SelectError};
pub use self::validate::{validate_instance, SchemaError};

pub const DIALECT_URI: &str = "https://json-schema.org/draft/2020-12/schema";

pub const TYPE_NAMES: [&str; 7] = [
    "null", "boolean", "integer", "number", "string", "array", "object",
];

/// A JSON Schema document. Wraps the raw JSON so unknown keywords survive
/// every round trip.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SchemaNode(DataNode);

impl SchemaNode {
    pub fn new(node: DataNode) -> Self {
        SchemaNode(node)
    }

    /// The vacuous schema `{}`.
    pub fn any() -> Self {
        SchemaNode(DataNode::empty_object())
    }

    pub fn parse(text: &str) -> Result<Self, JsonSyntaxError> {
        parse_json(text).map(SchemaNode)
    }

    pub fn as_node(&self) -> &DataNode {
        &self.0
    }

    pub fn into_node(self) -> DataNode {
        self.0
    }

    pub fn keyword(&self, name: &str) -> Option<&DataNode> {
        self.0.get(name)
    }

    pub fn to_json(&self, compact: bool) -> String {
        serialize_json(&self.0, compact)
    }

    /// Copy with `$schema` set to the 2020-12 dialect URI as the first key,
    /// used when a schema is written out as a standalone document.
    pub fn with_dialect(&self) -> SchemaNode {
        match &self.0 {
            DataNode::Object(map) if !map.contains_key("$schema") => {
                let mut out = crate::document::Map::with_capacity(map.len() + 1);
                out.insert("$schema".into(), DataNode::from(DIALECT_URI));
                out.extend(map.iter().map(|(k, v)| (k.clone(), v.clone())));
                SchemaNode(DataNode::Object(out))
            }
            _ => self.clone(),
        }
    }
}

impl From<DataNode> for SchemaNode {
    fn from(node: DataNode) -> Self {
        SchemaNode(node)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub instance_path: DocPath,
    pub schema_path: DocPath,
    pub keyword: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} ({} at {}): {}",
            self.instance_path, self.keyword, self.schema_path, self.message
        )
    }
}

/// Outcome of instance or schema validation. `valid` is true exactly when
/// `violations` is empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok() -> Self {
        ValidationReport {
            valid: true,
            violations: Vec::new(),
        }
    }

    pub fn from_violations(violations: Vec<Violation>) -> Self {
        ValidationReport {
            valid: violations.is_empty(),
            violations,
        }
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.valid {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::node;

    #[test]
    fn dialect_is_prepended() {
        let s = SchemaNode::new(node(r#"{"type":"object"}"#)).with_dialect();
        assert_eq!(
            s.to_json(true),
            format!(r#"{{"$schema":"{DIALECT_URI}","type":"object"}}"#)
        );
        assert_eq!(s.with_dialect(), s);
    }

    #[test]
    fn report_validity_tracks_violations() {
        assert!(ValidationReport::from_violations(vec![]).valid);
        let v = Violation {
            instance_path: DocPath::root(),
            schema_path: DocPath::root(),
            keyword: "type".into(),
            message: "x".into(),
        };
        assert!(!ValidationReport::from_violations(vec![v]).valid);
    }
}
