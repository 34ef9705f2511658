//! CSV import (RFC 4180). Each row becomes an object; cells are sniffed:
//! optional sign plus digits is an integer, anything else that reads as a
//! decimal is a number, exact lowercase `true`/`false` is a boolean, and the
//! rest (including `yes`/`no` and empty cells) stays a string.

use serde::{Deserialize, Serialize};

use super::{DataNode, Map, Number};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CsvOptions {
    pub delimiter: u8,
    /// When false, columns are named `column1`, `column2`, ...
    pub header: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            delimiter: b',',
            header: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CsvError {
    #[error("row {row} has {actual} fields, expected {expected}")]
    Ragged {
        row: u64,
        expected: u64,
        actual: u64,
    },
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("CSV error: {0}")]
    Other(String),
}

pub fn from_csv(text: &str, options: CsvOptions) -> Result<DataNode, CsvError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(options.header)
        .flexible(false)
        .from_reader(text.as_bytes());

    let mut columns: Vec<String> = Vec::new();
    if options.header {
        let headers = reader.headers().map_err(|e| map_error(e, options.header))?;
        for h in headers {
            if columns.iter().any(|c| c == h) {
                return Err(CsvError::DuplicateColumn(h.to_string()));
            }
            columns.push(h.to_string());
        }
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| map_error(e, options.header))?;
        if columns.is_empty() {
            columns = (1..=record.len()).map(|i| format!("column{i}")).collect();
        }
        let mut row = Map::with_capacity(columns.len());
        for (key, cell) in columns.iter().zip(record.iter()) {
            row.insert(key.clone(), sniff_cell(cell));
        }
        rows.push(DataNode::Object(row));
    }
    Ok(DataNode::Array(rows))
}

fn map_error(e: csv::Error, header: bool) -> CsvError {
    match e.kind() {
        csv::ErrorKind::UnequalLengths {
            pos,
            expected_len,
            len,
        } => {
            let record = pos.as_ref().map(|p| p.record()).unwrap_or(0);
            CsvError::Ragged {
                // data-row index, not counting the header line
                row: if header { record.saturating_sub(1) } else { record },
                expected: *expected_len,
                actual: *len,
            }
        }
        _ => CsvError::Other(e.to_string()),
    }
}

pub(crate) fn sniff_cell(cell: &str) -> DataNode {
    let digits = cell.strip_prefix(['+', '-']).unwrap_or(cell);
    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
        if let Ok(n) = Number::parse_lenient(cell) {
            return DataNode::Number(n);
        }
    }
    match cell {
        "true" => return DataNode::Bool(true),
        "false" => return DataNode::Bool(false),
        _ => {}
    }
    if looks_decimal(cell) {
        if let Ok(n) = Number::parse_lenient(cell) {
            return DataNode::Number(n);
        }
    }
    DataNode::String(cell.to_string())
}

fn looks_decimal(cell: &str) -> bool {
    let body = cell.strip_prefix(['+', '-']).unwrap_or(cell);
    body.bytes().any(|b| b.is_ascii_digit())
        && body
            .bytes()
            .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'e' | b'E' | b'+' | b'-'))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::parse_json;

    fn csv(text: &str) -> DataNode {
        from_csv(text, CsvOptions::default()).unwrap()
    }

    #[test]
    fn sniffs_integers_and_strings() {
        assert_eq!(csv("a,b\n1,x"), parse_json(r#"[{"a":1,"b":"x"}]"#).unwrap());
    }

    #[test]
    fn header_only_is_empty_array() {
        assert_eq!(csv("a,b"), DataNode::Array(vec![]));
        assert_eq!(csv("a,b\n"), DataNode::Array(vec![]));
    }

    #[test]
    fn yes_no_stay_strings() {
        assert_eq!(
            csv("product_purity\nyes\nno"),
            parse_json(r#"[{"product_purity":"yes"},{"product_purity":"no"}]"#).unwrap()
        );
    }

    #[test]
    fn cell_rules() {
        assert_eq!(sniff_cell("-12"), DataNode::from(-12));
        assert_eq!(sniff_cell("+7"), DataNode::from(7));
        assert_eq!(sniff_cell("2.5"), parse_json("2.5").unwrap());
        assert_eq!(sniff_cell("1e3"), parse_json("1000.0").unwrap());
        assert_eq!(sniff_cell("true"), DataNode::Bool(true));
        assert_eq!(sniff_cell("True"), DataNode::from("True"));
        assert_eq!(sniff_cell(""), DataNode::from(""));
        assert_eq!(sniff_cell("1.2.3"), DataNode::from("1.2.3"));
        assert_eq!(sniff_cell("2024-01-05"), DataNode::from("2024-01-05"));
        assert_eq!(sniff_cell(" 5"), DataNode::from(" 5"));
        assert_eq!(sniff_cell("e"), DataNode::from("e"));
    }

    #[test]
    fn ragged_row_is_reported() {
        let err = from_csv("a,b\n1,2\n3", CsvOptions::default()).unwrap_err();
        assert_eq!(
            err,
            CsvError::Ragged {
                row: 1,
                expected: 2,
                actual: 1
            }
        );
    }

    #[test]
    fn custom_delimiter_and_no_header() {
        let opts = CsvOptions {
            delimiter: b';',
            header: false,
        };
        assert_eq!(
            from_csv("1;x\n2;y", opts).unwrap(),
            parse_json(r#"[{"column1":1,"column2":"x"},{"column1":2,"column2":"y"}]"#).unwrap()
        );
    }

    #[test]
    fn quoted_cells() {
        assert_eq!(
            csv("name,note\n\"ZrCl4\",\"a, b\"\"c\"\"\""),
            parse_json(r#"[{"name":"ZrCl4","note":"a, b\"c\""}]"#).unwrap()
        );
    }

    #[test]
    fn rows_share_key_sets() {
        let doc = csv("a,b,c\n1,,x\n2,3,");
        let rows = doc.as_array().unwrap();
        let keys: Vec<Vec<&String>> = rows
            .iter()
            .map(|r| r.as_object().unwrap().keys().collect())
            .collect();
        assert!(keys.windows(2).all(|w| w[0] == w[1]));
    }
}
