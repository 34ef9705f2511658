use std::fmt;

use serde::{Deserialize, Serialize};

use super::DataNode;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PathSegment {
    Index(usize),
    Key(String),
}

impl From<&str> for PathSegment {
    fn from(s: &str) -> Self {
        PathSegment::Key(s.to_string())
    }
}

impl From<String> for PathSegment {
    fn from(s: String) -> Self {
        PathSegment::Key(s)
    }
}

impl From<usize> for PathSegment {
    fn from(i: usize) -> Self {
        PathSegment::Index(i)
    }
}

impl fmt::Display for PathSegment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathSegment::Index(i) => write!(f, "{i}"),
            PathSegment::Key(k) => f.write_str(k),
        }
    }
}

/// Address of a node inside a document. The empty path is the root.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DocPath {
    pub segments: Vec<PathSegment>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("path {requested} not found; deepest resolvable prefix is {prefix}")]
pub struct PathNotFound {
    pub requested: DocPath,
    pub prefix: DocPath,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid JSON pointer `{0}`: must be empty or start with '/'")]
pub struct PointerSyntaxError(pub String);

impl DocPath {
    pub fn root() -> Self {
        DocPath::default()
    }

    pub fn new(segments: Vec<PathSegment>) -> Self {
        DocPath { segments }
    }

    pub fn is_root(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn child(&self, segment: impl Into<PathSegment>) -> DocPath {
        let mut segments = self.segments.clone();
        segments.push(segment.into());
        DocPath { segments }
    }

    pub fn push(&mut self, segment: impl Into<PathSegment>) {
        self.segments.push(segment.into());
    }

    pub fn parent(&self) -> Option<DocPath> {
        let (_, rest) = self.segments.split_last()?;
        Some(DocPath::new(rest.to_vec()))
    }

    pub fn starts_with(&self, prefix: &DocPath) -> bool {
        self.segments.starts_with(&prefix.segments)
    }

    /// Parses an RFC 6901 JSON pointer. All-digit segments become indices;
    /// resolution falls back to a key lookup when the node is an object.
    pub fn from_pointer(pointer: &str) -> Result<DocPath, PointerSyntaxError> {
        if pointer.is_empty() {
            return Ok(DocPath::root());
        }
        let rest = pointer
            .strip_prefix('/')
            .ok_or_else(|| PointerSyntaxError(pointer.to_string()))?;
        let segments = rest
            .split('/')
            .map(|raw| {
                let seg = raw.replace("~1", "/").replace("~0", "~");
                let numeric = !seg.is_empty()
                    && seg.bytes().all(|b| b.is_ascii_digit())
                    && (seg == "0" || !seg.starts_with('0'));
                match seg.parse::<usize>() {
                    Ok(i) if numeric => PathSegment::Index(i),
                    _ => PathSegment::Key(seg),
                }
            })
            .collect();
        Ok(DocPath { segments })
    }

    pub fn to_pointer(&self) -> String {
        let mut out = String::new();
        for seg in &self.segments {
            out.push('/');
            match seg {
                PathSegment::Index(i) => out.push_str(&i.to_string()),
                PathSegment::Key(k) => out.push_str(&k.replace('~', "~0").replace('/', "~1")),
            }
        }
        out
    }
}

impl fmt::Display for DocPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.segments.is_empty() {
            f.write_str("/")
        } else {
            f.write_str(&self.to_pointer())
        }
    }
}

impl<S: Into<PathSegment>> FromIterator<S> for DocPath {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        DocPath {
            segments: iter.into_iter().map(Into::into).collect(),
        }
    }
}

fn step<'a>(node: &'a DataNode, seg: &PathSegment) -> Option<&'a DataNode> {
    match (node, seg) {
        (DataNode::Array(items), PathSegment::Index(i)) => items.get(*i),
        (DataNode::Object(map), PathSegment::Key(k)) => map.get(k),
        (DataNode::Object(map), PathSegment::Index(i)) => map.get(&i.to_string()),
        _ => None,
    }
}

fn step_mut<'a>(node: &'a mut DataNode, seg: &PathSegment) -> Option<&'a mut DataNode> {
    match (node, seg) {
        (DataNode::Array(items), PathSegment::Index(i)) => items.get_mut(*i),
        (DataNode::Object(map), PathSegment::Key(k)) => map.get_mut(k),
        (DataNode::Object(map), PathSegment::Index(i)) => map.get_mut(&i.to_string()),
        _ => None,
    }
}

/// Returns the node at `path`, or the deepest resolvable prefix on failure.
pub fn resolve_path<'a>(doc: &'a DataNode, path: &DocPath) -> Result<&'a DataNode, PathNotFound> {
    let mut current = doc;
    for (depth, seg) in path.segments.iter().enumerate() {
        current = step(current, seg).ok_or_else(|| PathNotFound {
            requested: path.clone(),
            prefix: DocPath::new(path.segments[..depth].to_vec()),
        })?;
    }
    Ok(current)
}

pub fn resolve_path_mut<'a>(
    doc: &'a mut DataNode,
    path: &DocPath,
) -> Result<&'a mut DataNode, PathNotFound> {
    // Locate first so the error carries the prefix without a second borrow.
    resolve_path(doc, path)?;
    let mut current = doc;
    for seg in &path.segments {
        current = step_mut(current, seg).expect("path resolved above");
    }
    Ok(current)
}
