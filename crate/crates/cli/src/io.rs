//! File reading by extension and stdout output.

use std::io::{Read, Write};
use std::path::Path;

use clap::ValueEnum;
use schemaforge_core::document::{
    from_csv, from_xml, from_yaml, parse_json, serialize_json, to_pretty_json, to_yaml,
    CsvOptions, DataNode,
};
use schemaforge_core::schema::SchemaNode;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Yaml,
    Xml,
    Csv,
}

impl Format {
    pub fn from_path(path: &Path) -> Result<Format, CliError> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("json") | Some("jsonc") => Ok(Format::Json),
            Some("yaml") | Some("yml") => Ok(Format::Yaml),
            Some("xml") => Ok(Format::Xml),
            Some("csv") => Ok(Format::Csv),
            // Standard input without a hint is read as JSON.
            _ if path.as_os_str() == "-" => Ok(Format::Json),
            _ => Err(CliError::Usage(format!(
                "cannot tell the format of {} from its extension; pass --from",
                path.display()
            ))),
        }
    }
}

/// Reads a file, or standard input for `-`.
pub fn read_text(path: &Path) -> Result<String, CliError> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::input(path, e))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| CliError::input(path, e))
}

pub fn parse_document(text: &str, format: Format, path: &Path) -> Result<DataNode, CliError> {
    match format {
        Format::Json => parse_json(text).map_err(|e| CliError::input(path, e)),
        Format::Yaml => from_yaml(text).map_err(|e| CliError::input(path, e)),
        Format::Xml => from_xml(text).map_err(|e| CliError::input(path, e)),
        Format::Csv => from_csv(text, CsvOptions::default()).map_err(|e| CliError::input(path, e)),
    }
}

pub fn read_document(path: &Path, format: Option<Format>) -> Result<DataNode, CliError> {
    let format = match format {
        Some(f) => f,
        None => Format::from_path(path)?,
    };
    parse_document(&read_text(path)?, format, path)
}

/// Schemas are JSON or YAML.
pub fn read_schema(path: &Path) -> Result<SchemaNode, CliError> {
    let format = match Format::from_path(path) {
        Ok(Format::Yaml) => Format::Yaml,
        _ => Format::Json,
    };
    Ok(SchemaNode::new(read_document(path, Some(format))?))
}

pub struct Out {
    pub pretty: bool,
}

impl Out {
    pub fn render(&self, doc: &DataNode) -> String {
        if self.pretty {
            to_pretty_json(doc)
        } else {
            serialize_json(doc, true)
        }
    }

    pub fn json(&self, doc: &DataNode) -> Result<(), CliError> {
        self.text(&self.render(doc))
    }

    pub fn yaml(&self, doc: &DataNode) -> Result<(), CliError> {
        self.text(&to_yaml(doc))
    }

    /// Any serializable report, as JSON.
    pub fn value(&self, v: &impl serde::Serialize) -> Result<(), CliError> {
        let text = if self.pretty {
            serde_json::to_string_pretty(v)
        } else {
            serde_json::to_string(v)
        }
        .map_err(|e| CliError::Usage(e.to_string()))?;
        self.text(&text)
    }

    pub fn text(&self, s: &str) -> Result<(), CliError> {
        let mut stdout = std::io::stdout().lock();
        let written = stdout
            .write_all(s.as_bytes())
            .and_then(|()| if s.ends_with('\n') { Ok(()) } else { stdout.write_all(b"\n") })
            .and_then(|()| stdout.flush());
        match written {
            // The reader went away (`| head`); nothing left to report.
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Err(CliError::Exit(0)),
            other => Ok(other?),
        }
    }
}
