//! YAML 1.2 (core schema) conversion. `yes`/`no`/`on`/`off` stay strings;
//! anchors are expanded by the loader.

use yaml_rust2::{Yaml, YamlEmitter, YamlLoader};

use super::{DataNode, Map, Number};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum YamlError {
    #[error("YAML syntax error: {0}")]
    Syntax(String),
    #[error("unsupported YAML construct: {0}")]
    Unsupported(String),
}

pub fn from_yaml(text: &str) -> Result<DataNode, YamlError> {
    let docs = YamlLoader::load_from_str(text).map_err(|e| YamlError::Syntax(e.to_string()))?;
    match docs.len() {
        0 => Ok(DataNode::Null),
        1 => convert(&docs[0]),
        n => Err(YamlError::Unsupported(format!(
            "stream holds {n} documents; exactly one expected"
        ))),
    }
}

fn convert(y: &Yaml) -> Result<DataNode, YamlError> {
    Ok(match y {
        Yaml::Null => DataNode::Null,
        Yaml::Boolean(b) => DataNode::Bool(*b),
        Yaml::Integer(i) => DataNode::Number(Number::from_i64(*i)),
        Yaml::Real(text) => DataNode::Number(Number::parse_lenient(text).map_err(|_| {
            YamlError::Unsupported(format!("non-finite or unrepresentable number `{text}`"))
        })?),
        Yaml::String(s) => DataNode::String(s.clone()),
        Yaml::Array(items) => {
            DataNode::Array(items.iter().map(convert).collect::<Result<_, _>>()?)
        }
        Yaml::Hash(hash) => {
            let mut map = Map::with_capacity(hash.len());
            for (k, v) in hash {
                map.insert(key_text(k)?, convert(v)?);
            }
            DataNode::Object(map)
        }
        Yaml::Alias(_) => return Err(YamlError::Unsupported("unresolved alias".into())),
        Yaml::BadValue => return Err(YamlError::Unsupported("invalid tagged value".into())),
    })
}

fn key_text(k: &Yaml) -> Result<String, YamlError> {
    match k {
        Yaml::String(s) => Ok(s.clone()),
        Yaml::Integer(i) => Ok(i.to_string()),
        Yaml::Real(r) => Ok(r.clone()),
        Yaml::Boolean(b) => Ok(b.to_string()),
        Yaml::Null => Ok("null".to_string()),
        _ => Err(YamlError::Unsupported("complex mapping key".into())),
    }
}

fn to_yaml_value(doc: &DataNode) -> Yaml {
    match doc {
        DataNode::Null => Yaml::Null,
        DataNode::Bool(b) => Yaml::Boolean(*b),
        DataNode::Number(n) => match (n.is_integer(), n.to_i64()) {
            (true, Some(i)) => Yaml::Integer(i),
            _ => Yaml::Real(n.as_str().to_string()),
        },
        DataNode::String(s) => Yaml::String(s.clone()),
        DataNode::Array(items) => Yaml::Array(items.iter().map(to_yaml_value).collect()),
        DataNode::Object(map) => Yaml::Hash(
            map.iter()
                .map(|(k, v)| (Yaml::String(k.clone()), to_yaml_value(v)))
                .collect(),
        ),
    }
}

/// Emits a block-style YAML document (without the leading `---`).
pub fn to_yaml(doc: &DataNode) -> String {
    let mut out = String::new();
    let mut emitter = YamlEmitter::new(&mut out);
    emitter
        .dump(&to_yaml_value(doc))
        .expect("writing to a String cannot fail");
    let body = out.strip_prefix("---\n").unwrap_or(&out).to_string();
    let body = body.strip_prefix("--- ").map(str::to_string).unwrap_or(body);
    body + "\n"
}
