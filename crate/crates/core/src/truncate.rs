//! Recursive array and property truncation.
//!
//! Size is the byte length of the compact JSON serialization. Each iteration
//! trims the original document at the current `n`, keeping the first `n`
//! array elements and the first `property_factor * n` object properties at
//! every level. `n` halves until the result fits or `n_min` is reached.

use serde::{Deserialize, Serialize};

use crate::document::{compact_len, DataNode, Map};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TruncationConfig {
    pub target_bytes: usize,
    pub n_start: usize,
    pub n_min: usize,
    pub property_factor: usize,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig {
            target_bytes: 65536,
            n_start: 64,
            n_min: 2,
            property_factor: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("`{0}` must be at least 1")]
    Zero(&'static str),
    #[error("n_min ({n_min}) must not exceed n_start ({n_start})")]
    MinAboveStart { n_min: usize, n_start: usize },
}

impl TruncationConfig {
    pub fn check(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("target_bytes", self.target_bytes),
            ("n_start", self.n_start),
            ("n_min", self.n_min),
            ("property_factor", self.property_factor),
        ] {
            if v == 0 {
                return Err(ConfigError::Zero(name));
            }
        }
        if self.n_min > self.n_start {
            return Err(ConfigError::MinAboveStart {
                n_min: self.n_min,
                n_start: self.n_start,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationOutcome {
    pub doc: DataNode,
    pub final_n: usize,
    pub iterations: usize,
    pub bytes: usize,
    pub budget_met: bool,
}

/// Keeps the first `n` elements of every array and the first
/// `property_factor * n` properties of every object, recursively.
pub fn trim_at(doc: &DataNode, n: usize, property_factor: usize) -> DataNode {
    let max_props = n.saturating_mul(property_factor);
    trim(doc, n, max_props)
}

fn trim(doc: &DataNode, n: usize, max_props: usize) -> DataNode {
    match doc {
        DataNode::Array(items) => {
            DataNode::Array(items.iter().take(n).map(|i| trim(i, n, max_props)).collect())
        }
        DataNode::Object(map) => {
            let mut out = Map::with_capacity(map.len().min(max_props));
            for (k, v) in map.iter().take(max_props) {
                out.insert(k.clone(), trim(v, n, max_props));
            }
            DataNode::Object(out)
        }
        scalar => scalar.clone(),
    }
}

/// Shrinks `doc` below `cfg.target_bytes`, or as far as `cfg.n_min` allows.
/// A config with zero fields or `n_min > n_start` is clamped into range.
pub fn truncate_document(doc: &DataNode, cfg: &TruncationConfig) -> TruncationOutcome {
    let bytes = compact_len(doc);
    let n_start = cfg.n_start.max(1);
    let n_min = cfg.n_min.clamp(1, n_start);
    let factor = cfg.property_factor.max(1);
    if bytes <= cfg.target_bytes {
        return TruncationOutcome {
            doc: doc.clone(),
            final_n: n_start,
            iterations: 0,
            bytes,
            budget_met: true,
        };
    }

    let mut n = n_start;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let trimmed = trim_at(doc, n, factor);
        let bytes = compact_len(&trimmed);
        if bytes <= cfg.target_bytes || n <= n_min {
            return TruncationOutcome {
                doc: trimmed,
                final_n: n,
                iterations,
                bytes,
                budget_met: bytes <= cfg.target_bytes,
            };
        }
        n = (n / 2).max(n_min);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::document::node;

    #[test]
    fn array_of_hundred() {
        let doc = DataNode::Array((0..100).map(DataNode::from).collect());
        let t = trim_at(&doc, 64, 8);
        assert_eq!(t.as_array().unwrap().len(), 64);
        assert_eq!(t.as_array().unwrap()[63], DataNode::from(63));
    }

    #[test]
    fn wide_object_keeps_first_512() {
        let mut m = Map::new();
        for i in 0..600 {
            m.insert(format!("k{i}"), DataNode::from(i));
        }
        let t = trim_at(&DataNode::Object(m), 64, 8);
        let o = t.as_object().unwrap();
        assert_eq!(o.len(), 512);
        assert_eq!(o.keys().last().unwrap(), "k511");
    }

    #[test]
    fn small_docs_pass_through() {
        let doc = node(r#"{"a":[1,2,3],"b":"x"}"#);
        assert_eq!(trim_at(&doc, 64, 8), doc);
        let out = truncate_document(&doc, &TruncationConfig::default());
        assert_eq!(out.iterations, 0);
        assert!(out.budget_met);
        assert_eq!(out.doc, doc);
    }

    #[test]
    fn floor_is_reported() {
        let doc = DataNode::from("x".repeat(100));
        let cfg = TruncationConfig {
            target_bytes: 10,
            ..TruncationConfig::default()
        };
        let out = truncate_document(&doc, &cfg);
        assert_eq!(out.final_n, 2);
        assert_eq!(out.iterations, 6);
        assert!(!out.budget_met);
    }

    #[test]
    fn config_checks() {
        assert!(TruncationConfig::default().check().is_ok());
        let bad = TruncationConfig {
            n_min: 100,
            ..TruncationConfig::default()
        };
        assert!(matches!(bad.check(), Err(ConfigError::MinAboveStart { .. })));
    }
}
