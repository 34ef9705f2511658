use std::fmt::Write as _;

use super::{DataNode, Map};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {message}")]
pub struct JsonSyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// Parses JSON text into a [`DataNode`], preserving key order. Duplicate keys
/// keep the last value.
pub fn parse_json(text: &str) -> Result<DataNode, JsonSyntaxError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| JsonSyntaxError {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })?;
    DataNode::try_from(value).map_err(|e| JsonSyntaxError {
        line: 0,
        column: 0,
        message: e.to_string(),
    })
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Serializes to JSON. Compact output has no insignificant whitespace; the
/// pretty form indents by two spaces.
pub fn serialize_json(doc: &DataNode, compact: bool) -> String {
    let mut out = String::with_capacity(64);
    if compact {
        write_compact(doc, &mut out);
    } else {
        write_pretty(doc, 0, &mut out);
    }
    out
}

pub fn to_pretty_json(doc: &DataNode) -> String {
    serialize_json(doc, false)
}

fn write_compact(doc: &DataNode, out: &mut String) {
    match doc {
        DataNode::Null => out.push_str("null"),
        DataNode::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        DataNode::Number(n) => out.push_str(n.as_str()),
        DataNode::String(s) => write_string(s, out),
        DataNode::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_compact(item, out);
            }
            out.push(']');
        }
        DataNode::Object(map) => {
            out.push('{');
            for (i, (k, v)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_string(k, out);
                out.push(':');
                write_compact(v, out);
            }
            out.push('}');
        }
    }
}

fn write_pretty(doc: &DataNode, indent: usize, out: &mut String) {
    match doc {
        DataNode::Array(items) if !items.is_empty() => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                push_indent(indent + 1, out);
                write_pretty(item, indent + 1, out);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            push_indent(indent, out);
            out.push(']');
        }
        DataNode::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            for (i, (k, v)) in map.iter().enumerate() {
                push_indent(indent + 1, out);
                write_string(k, out);
                out.push_str(": ");
                write_pretty(v, indent + 1, out);
                if i + 1 < map.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            push_indent(indent, out);
            out.push('}');
        }
        other => write_compact(other, out),
    }
}

fn push_indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_string(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            '\u{8}' => out.push_str("\\b"),
            '\u{c}' => out.push_str("\\f"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

fn string_len(s: &str) -> usize {
    2 + s
        .chars()
        .map(|c| match c {
            '"' | '\\' | '\n' | '\r' | '\t' | '\u{8}' | '\u{c}' => 2,
            c if (c as u32) < 0x20 => 6,
            c => c.len_utf8(),
        })
        .sum::<usize>()
}

/// Byte length of the compact serialization, computed without building it.
pub fn compact_len(doc: &DataNode) -> usize {
    match doc {
        DataNode::Null => 4,
        DataNode::Bool(true) => 4,
        DataNode::Bool(false) => 5,
        DataNode::Number(n) => n.as_str().len(),
        DataNode::String(s) => string_len(s),
        DataNode::Array(items) => {
            2 + items.len().saturating_sub(1) + items.iter().map(compact_len).sum::<usize>()
        }
        DataNode::Object(map) => object_len(map),
    }
}

fn object_len(map: &Map) -> usize {
    2 + map.len().saturating_sub(1)
        + map
            .iter()
            .map(|(k, v)| string_len(k) + 1 + compact_len(v))
            .sum::<usize>()
}
