//! XML to [`DataNode`] conversion.
//!
//! Convention: an element becomes an object keyed by its children; attributes
//! go under `@name`, text under `#text`, and repeated sibling elements
//! collapse into an array. An element with only text becomes that string and
//! an empty element becomes `null`. Text is never type-sniffed.

use indexmap::IndexMap;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{DataNode, Map};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed XML at byte {position}: {message}")]
pub struct XmlError {
    pub position: u64,
    pub message: String,
}

struct Frame {
    name: String,
    attributes: Vec<(String, String)>,
    children: Vec<(String, DataNode)>,
    text: Vec<String>,
}

impl Frame {
    fn open(start: &BytesStart<'_>, reader: &Reader<&[u8]>) -> Result<Frame, XmlError> {
        let name = String::from_utf8_lossy(start.name().as_ref()).into_owned();
        let mut attributes = Vec::new();
        for attr in start.attributes() {
            let attr = attr.map_err(|e| error_at(reader, e.to_string()))?;
            let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
            let value = attr
                .unescape_value()
                .map_err(|e| error_at(reader, e.to_string()))?
                .into_owned();
            attributes.push((key, value));
        }
        Ok(Frame {
            name,
            attributes,
            children: Vec::new(),
            text: Vec::new(),
        })
    }

    fn close(self) -> (String, DataNode) {
        let text = self.text.join(" ");
        if self.attributes.is_empty() && self.children.is_empty() {
            let node = if text.is_empty() {
                DataNode::Null
            } else {
                DataNode::String(text)
            };
            return (self.name, node);
        }
        let mut map = Map::new();
        for (k, v) in self.attributes {
            map.insert(format!("@{k}"), DataNode::String(v));
        }
        let mut grouped: IndexMap<String, Vec<DataNode>> = IndexMap::new();
        for (name, child) in self.children {
            grouped.entry(name).or_default().push(child);
        }
        for (name, mut nodes) in grouped {
            let value = if nodes.len() == 1 {
                nodes.pop().expect("one node")
            } else {
                DataNode::Array(nodes)
            };
            map.insert(name, value);
        }
        if !text.is_empty() {
            map.insert("#text".to_string(), DataNode::String(text));
        }
        (self.name, DataNode::Object(map))
    }
}

fn error_at(reader: &Reader<&[u8]>, message: String) -> XmlError {
    XmlError {
        position: reader.buffer_position(),
        message,
    }
}

pub fn from_xml(text: &str) -> Result<DataNode, XmlError> {
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(true);
    let mut stack: Vec<Frame> = Vec::new();
    let mut root: Option<(String, DataNode)> = None;

    loop {
        let event = reader.read_event().map_err(|e| XmlError {
            position: reader.error_position(),
            message: e.to_string(),
        })?;
        match event {
            Event::Start(start) => {
                if root.is_some() && stack.is_empty() {
                    return Err(error_at(&reader, "multiple root elements".into()));
                }
                stack.push(Frame::open(&start, &reader)?);
            }
            Event::Empty(start) => {
                if root.is_some() && stack.is_empty() {
                    return Err(error_at(&reader, "multiple root elements".into()));
                }
                let closed = Frame::open(&start, &reader)?.close();
                attach(&mut stack, &mut root, closed);
            }
            Event::End(_) => {
                let frame = stack
                    .pop()
                    .ok_or_else(|| error_at(&reader, "unexpected closing tag".into()))?;
                let closed = frame.close();
                attach(&mut stack, &mut root, closed);
            }
            Event::Text(t) => {
                let content = t
                    .unescape()
                    .map_err(|e| error_at(&reader, e.to_string()))?
                    .into_owned();
                push_text(&mut stack, &reader, content)?;
            }
            Event::CData(c) => {
                let content = String::from_utf8_lossy(&c.into_inner()).into_owned();
                push_text(&mut stack, &reader, content)?;
            }
            Event::Eof => break,
            Event::Decl(_) | Event::Comment(_) | Event::PI(_) | Event::DocType(_) => {}
        }
    }

    if !stack.is_empty() {
        return Err(error_at(&reader, "unclosed element at end of input".into()));
    }
    let (name, node) = root.ok_or_else(|| error_at(&reader, "no root element".into()))?;
    let mut map = Map::new();
    map.insert(name, node);
    Ok(DataNode::Object(map))
}

fn push_text(stack: &mut [Frame], reader: &Reader<&[u8]>, content: String) -> Result<(), XmlError> {
    if content.trim().is_empty() {
        return Ok(());
    }
    match stack.last_mut() {
        Some(frame) => {
            frame.text.push(content);
            Ok(())
        }
        None => Err(error_at(reader, "text outside the root element".into())),
    }
}

fn attach(stack: &mut [Frame], root: &mut Option<(String, DataNode)>, closed: (String, DataNode)) {
    match stack.last_mut() {
        Some(parent) => parent.children.push(closed),
        None => *root = Some(closed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::parse_json;

    #[test]
    fn empty_element_is_null() {
        assert_eq!(from_xml("<a/>").unwrap(), parse_json(r#"{"a":null}"#).unwrap());
        assert_eq!(from_xml("<a></a>").unwrap(), parse_json(r#"{"a":null}"#).unwrap());
    }

    #[test]
    fn attributes_and_text() {
        assert_eq!(
            from_xml(r#"<r role="metal">ZrCl4</r>"#).unwrap(),
            parse_json(r##"{"r":{"@role":"metal","#text":"ZrCl4"}}"##).unwrap()
        );
    }

    #[test]
    fn repeated_siblings_collapse() {
        assert_eq!(
            from_xml("<x><i>1</i><i>2</i></x>").unwrap(),
            parse_json(r#"{"x":{"i":["1","2"]}}"#).unwrap()
        );
        assert_eq!(
            from_xml("<x><i>1</i><j/><i>2</i><i>3</i></x>").unwrap(),
            parse_json(r#"{"x":{"i":["1","2","3"],"j":null}}"#).unwrap()
        );
    }

    #[test]
    fn nested_repetition_is_not_confused_with_child_arrays() {
        let doc = from_xml("<x><g><i>1</i><i>2</i></g><g><i>3</i></g></x>").unwrap();
        assert_eq!(
            doc,
            parse_json(r#"{"x":{"g":[{"i":["1","2"]},{"i":"3"}]}}"#).unwrap()
        );
    }

    #[test]
    fn entities_cdata_and_whitespace() {
        let doc = from_xml("<?xml version=\"1.0\"?>\n<a>\n  <b>x &amp; y</b>\n  <c><![CDATA[<raw>]]></c>\n</a>")
            .unwrap();
        assert_eq!(doc, parse_json(r#"{"a":{"b":"x & y","c":"<raw>"}}"#).unwrap());
    }

    #[test]
    fn deterministic() {
        let src = r#"<m id="1"><r role="metal">ZrCl4</r><r role="linker">BDC</r></m>"#;
        assert_eq!(from_xml(src).unwrap(), from_xml(src).unwrap());
    }

    #[test]
    fn malformed_input_reports_position() {
        let err = from_xml("<a><b></a>").unwrap_err();
        assert!(err.message.contains("b") || err.message.contains("a"), "{err}");
        assert!(from_xml("<a>").is_err());
        assert!(from_xml("<a/><b/>").is_err());
        assert!(from_xml("").is_err());
        assert!(from_xml("text").is_err());
    }
}
