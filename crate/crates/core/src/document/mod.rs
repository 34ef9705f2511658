//! Uniform in-memory document model.
//!
//! Every input format (JSON, YAML, XML, CSV) converts into the same ordered
//! [`DataNode`] tree. Object keys keep insertion order, and numbers are exact
//! decimals (see [`Number`]).

mod csv;
mod json;
mod number;
mod path;
mod xml;
mod yaml;

use indexmap::IndexMap;

pub use self::csv::{from_csv, CsvError, CsvOptions};
pub use self::json::{compact_len, parse_json, serialize_json, to_pretty_json, JsonSyntaxError};
pub use self::number::{Number, NumberError, DIVISION_DIGITS};
pub use self::path::{
    resolve_path, resolve_path_mut, DocPath, PathNotFound, PathSegment, PointerSyntaxError,
};
pub use self::xml::{from_xml, XmlError};
pub use self::yaml::{from_yaml, to_yaml, YamlError};

pub type Map = IndexMap<String, DataNode>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataNode {
    Null,
    Bool(bool),
    Number(Number),
    String(String),
    Array(Vec<DataNode>),
    Object(Map),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Null,
    Boolean,
    Number,
    String,
    Array,
    Object,
}

impl NodeKind {
    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Null => "null",
            NodeKind::Boolean => "boolean",
            NodeKind::Number => "number",
            NodeKind::String => "string",
            NodeKind::Array => "array",
            NodeKind::Object => "object",
        }
    }
}

impl DataNode {
    pub fn kind(&self) -> NodeKind {
        match self {
            DataNode::Null => NodeKind::Null,
            DataNode::Bool(_) => NodeKind::Boolean,
            DataNode::Number(_) => NodeKind::Number,
            DataNode::String(_) => NodeKind::String,
            DataNode::Array(_) => NodeKind::Array,
            DataNode::Object(_) => NodeKind::Object,
        }
    }

    pub fn empty_object() -> DataNode {
        DataNode::Object(Map::new())
    }

    pub fn as_object(&self) -> Option<&Map> {
        match self {
            DataNode::Object(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_object_mut(&mut self) -> Option<&mut Map> {
        match self {
            DataNode::Object(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_array(&self) -> Option<&[DataNode]> {
        match self {
            DataNode::Array(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            DataNode::String(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<&Number> {
        match self {
            DataNode::Number(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            DataNode::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn get(&self, key: &str) -> Option<&DataNode> {
        self.as_object().and_then(|m| m.get(key))
    }

    /// Equality that treats numbers by value (`1 == 1.0`), as JSON Schema
    /// `const`/`enum` and the mapping language's `=` do.
    pub fn value_eq(&self, other: &DataNode) -> bool {
        match (self, other) {
            (DataNode::Number(a), DataNode::Number(b)) => a.numeric_eq(b),
            (DataNode::Array(a), DataNode::Array(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.value_eq(y))
            }
            (DataNode::Object(a), DataNode::Object(b)) => {
                a.len() == b.len()
                    && a.iter()
                        .all(|(k, v)| b.get(k).is_some_and(|w| v.value_eq(w)))
            }
            _ => self == other,
        }
    }
}

impl From<&str> for DataNode {
    fn from(s: &str) -> Self {
        DataNode::String(s.to_string())
    }
}

impl From<String> for DataNode {
    fn from(s: String) -> Self {
        DataNode::String(s)
    }
}

impl From<bool> for DataNode {
    fn from(b: bool) -> Self {
        DataNode::Bool(b)
    }
}

impl From<i64> for DataNode {
    fn from(v: i64) -> Self {
        DataNode::Number(Number::from_i64(v))
    }
}

impl From<Number> for DataNode {
    fn from(n: Number) -> Self {
        DataNode::Number(n)
    }
}

impl std::fmt::Display for DataNode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&serialize_json(self, true))
    }
}

impl serde::Serialize for DataNode {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::{SerializeMap, SerializeSeq};
        match self {
            DataNode::Null => serializer.serialize_unit(),
            DataNode::Bool(b) => serializer.serialize_bool(*b),
            DataNode::Number(n) => {
                let raw: serde_json::Number = n
                    .as_str()
                    .parse()
                    .map_err(|e| serde::ser::Error::custom(format!("{e}")))?;
                raw.serialize(serializer)
            }
            DataNode::String(s) => serializer.serialize_str(s),
            DataNode::Array(items) => {
                let mut seq = serializer.serialize_seq(Some(items.len()))?;
                for item in items {
                    seq.serialize_element(item)?;
                }
                seq.end()
            }
            DataNode::Object(map) => {
                let mut m = serializer.serialize_map(Some(map.len()))?;
                for (k, v) in map {
                    m.serialize_entry(k, v)?;
                }
                m.end()
            }
        }
    }
}

impl<'de> serde::Deserialize<'de> for DataNode {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        DataNode::try_from(value).map_err(serde::de::Error::custom)
    }
}

impl TryFrom<serde_json::Value> for DataNode {
    type Error = NumberError;

    fn try_from(value: serde_json::Value) -> Result<Self, Self::Error> {
        use serde_json::Value;
        Ok(match value {
            Value::Null => DataNode::Null,
            Value::Bool(b) => DataNode::Bool(b),
            Value::Number(n) => DataNode::Number(Number::parse(&n.to_string())?),
            Value::String(s) => DataNode::String(s),
            Value::Array(items) => DataNode::Array(
                items
                    .into_iter()
                    .map(DataNode::try_from)
                    .collect::<Result<_, _>>()?,
            ),
            Value::Object(map) => {
                let mut out = Map::with_capacity(map.len());
                for (k, v) in map {
                    out.insert(k, DataNode::try_from(v)?);
                }
                DataNode::Object(out)
            }
        })
    }
}

impl From<&DataNode> for serde_json::Value {
    fn from(node: &DataNode) -> Self {
        use serde_json::Value;
        match node {
            DataNode::Null => Value::Null,
            DataNode::Bool(b) => Value::Bool(*b),
            DataNode::Number(n) => Value::Number(
                n.as_str()
                    .parse()
                    .expect("canonical number text is valid JSON"),
            ),
            DataNode::String(s) => Value::String(s.clone()),
            DataNode::Array(items) => Value::Array(items.iter().map(Value::from).collect()),
            DataNode::Object(map) => Value::Object(
                map.iter()
                    .map(|(k, v)| (k.clone(), Value::from(v)))
                    .collect(),
            ),
        }
    }
}

/// Builds a [`DataNode`] from JSON text; panics on invalid input. Test and
/// fixture helper.
#[doc(hidden)]
pub fn node(json: &str) -> DataNode {
    parse_json(json).expect("valid JSON literal")
}
