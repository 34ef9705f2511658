//! Seeded document generators and an independent truncation oracle shared
//! by the property suites and the acceptance run.
#![allow(dead_code)]

use rand::Rng;
use schemaforge_core::document::{DataNode, DocPath, Map, Number};
use serde_json::Value;

const WORDS: [&str; 12] = [
    "alpha", "Zr", "linker", "ñandú", "温度", "🧪", "a\"q", "back\\slash", "tab\there", "ctl\u{1}",
    "", "x",
];

fn text(rng: &mut impl Rng, len: usize) -> String {
    let mut s = String::with_capacity(len + 8);
    while s.len() < len {
        s.push_str(WORDS[rng.random_range(0..WORDS.len())]);
        s.push(' ');
    }
    s
}

fn number(rng: &mut impl Rng) -> Number {
    let lexeme = match rng.random_range(0..5) {
        0 => rng.random_range(-1000i64..1000).to_string(),
        1 => format!("{}.{}", rng.random_range(-99i64..99), rng.random_range(1..999)),
        2 => format!("{}e{}", rng.random_range(1..9), rng.random_range(-5..5)),
        3 => u64::MAX.to_string(),
        _ => "0".to_string(),
    };
    Number::parse(&lexeme).expect("valid lexeme")
}

pub fn scalar(rng: &mut impl Rng, budget: usize) -> DataNode {
    match rng.random_range(0..8) {
        0 => DataNode::Null,
        1 => DataNode::Bool(rng.random()),
        2 | 3 => DataNode::Number(number(rng)),
        _ => DataNode::String(text(rng, budget.saturating_sub(2).min(4096))),
    }
}

/// A document whose compact size is roughly `budget` bytes.
pub fn sized(rng: &mut impl Rng, budget: usize, depth: usize) -> DataNode {
    if budget < 48 || depth >= 6 {
        return scalar(rng, budget);
    }
    let max_children = (budget / 24).clamp(1, 20_000);
    match rng.random_range(0..5) {
        // Long array of similar records.
        0 => {
            let count = rng.random_range(1..=max_children);
            let each = budget / count;
            DataNode::Array((0..count).map(|_| record(rng, each)).collect())
        }
        // Wide object.
        1 => {
            let count = rng.random_range(1..=max_children.min(4000));
            let each = budget / count;
            let mut m = Map::new();
            for i in 0..count {
                m.insert(format!("k{i}"), sized(rng, each.saturating_sub(8), depth + 1));
            }
            DataNode::Object(m)
        }
        // Array of scalars.
        2 => {
            let count = rng.random_range(1..=max_children);
            DataNode::Array((0..count).map(|_| scalar(rng, budget / count)).collect())
        }
        // A few large nested children.
        _ => {
            let count = rng.random_range(1..=6usize);
            if rng.random() {
                DataNode::Array((0..count).map(|_| sized(rng, budget / count, depth + 1)).collect())
            } else {
                let mut m = Map::new();
                for i in 0..count {
                    m.insert(format!("n{i}"), sized(rng, budget / count, depth + 1));
                }
                DataNode::Object(m)
            }
        }
    }
}

fn record(rng: &mut impl Rng, budget: usize) -> DataNode {
    let fields = (budget / 24).clamp(1, 12);
    let mut m = Map::new();
    for i in 0..fields {
        m.insert(format!("f{i}"), scalar(rng, budget / fields));
    }
    DataNode::Object(m)
}

/// A small document with heterogeneous arrays and sparse objects, for
/// inference checks.
pub fn varied(rng: &mut impl Rng, depth: usize) -> DataNode {
    let leaf = depth >= 5 || rng.random_range(0..10) < 3;
    if leaf {
        let budget = rng.random_range(0..24);
        return scalar(rng, budget);
    }
    match rng.random_range(0..4) {
        0 => {
            let n = rng.random_range(0..6);
            DataNode::Array((0..n).map(|_| varied(rng, depth + 1)).collect())
        }
        1 => {
            // Rows sharing some keys, like a table with missing cells.
            let n = rng.random_range(0..6);
            let keys = ["id", "name", "purity", "note", "qty"];
            DataNode::Array(
                (0..n)
                    .map(|_| {
                        let mut m = Map::new();
                        for k in keys {
                            if rng.random_range(0..4) > 0 {
                                m.insert(k.to_string(), varied(rng, depth + 2));
                            }
                        }
                        DataNode::Object(m)
                    })
                    .collect(),
            )
        }
        _ => {
            let n = rng.random_range(0..6);
            let mut m = Map::new();
            for i in 0..n {
                m.insert(format!("p{}", rng.random_range(0..8) + i), varied(rng, depth + 1));
            }
            DataNode::Object(m)
        }
    }
}

/// Reference trim over `serde_json::Value`, written independently of the
/// library walk.
pub fn ref_trim(v: &Value, n: usize, factor: usize) -> Value {
    match v {
        Value::Array(items) => Value::Array(items.iter().take(n).map(|x| ref_trim(x, n, factor)).collect()),
        Value::Object(map) => Value::Object(
            map.iter()
                .take(n * factor)
                .map(|(k, x)| (k.clone(), ref_trim(x, n, factor)))
                .collect(),
        ),
        other => other.clone(),
    }
}

pub fn ref_size(v: &Value) -> usize {
    serde_json::to_string(v).expect("serializable").len()
}

/// Reference loop: the (n, bytes) trace of every iteration and the final
/// document. An empty trace means the input already fit.
pub fn ref_loop(doc: &DataNode, target: usize, n_start: usize, n_min: usize, factor: usize) -> (Vec<(usize, usize)>, Value) {
    let v = Value::from(doc);
    if ref_size(&v) <= target {
        return (Vec::new(), v);
    }
    let mut trace = Vec::new();
    let mut n = n_start;
    loop {
        let t = ref_trim(&v, n, factor);
        let size = ref_size(&t);
        trace.push((n, size));
        if size <= target || n == n_min {
            return (trace, t);
        }
        n = std::cmp::max(n / 2, n_min);
    }
}

/// `{"rows": [...]}` with 10000 records of about 100 compact bytes each.
pub fn rows_document() -> DataNode {
    let rows = (0..10_000)
        .map(|i| {
            let mut m = Map::new();
            m.insert("id".into(), DataNode::from(i as i64));
            m.insert("sample".into(), DataNode::from(format!("S-{i:06}")));
            m.insert("note".into(), DataNode::from("n".repeat(60)));
            DataNode::Object(m)
        })
        .collect();
    let mut m = Map::new();
    m.insert("rows".into(), DataNode::Array(rows));
    DataNode::Object(m)
}

/// An object with 1000 properties of about 200 compact bytes each.
pub fn wide_document() -> DataNode {
    let mut m = Map::new();
    for i in 0..1000 {
        m.insert(format!("p{i:04}"), DataNode::from("w".repeat(190)));
    }
    DataNode::Object(m)
}

/// Every scalar leaf with its path.
pub fn leaves(doc: &DataNode) -> Vec<(DocPath, DataNode)> {
    fn walk(d: &DataNode, path: &DocPath, out: &mut Vec<(DocPath, DataNode)>) {
        match d {
            DataNode::Array(items) => {
                for (i, x) in items.iter().enumerate() {
                    walk(x, &path.child(i), out);
                }
            }
            DataNode::Object(m) => {
                for (k, x) in m {
                    walk(x, &path.child(k.as_str()), out);
                }
            }
            s => out.push((path.clone(), s.clone())),
        }
    }
    let mut out = Vec::new();
    walk(doc, &DocPath::root(), &mut out);
    out
}

/// A document whose compact size lies in `lo..=hi`, with the target size
/// drawn log-uniformly.
pub fn document_between(rng: &mut impl Rng, lo: usize, hi: usize) -> DataNode {
    loop {
        let exp = rng.random_range((lo as f64).ln()..(hi as f64).ln());
        let doc = sized(rng, exp.exp() as usize, 0);
        let size = schemaforge_core::document::compact_len(&doc);
        if (lo..=hi).contains(&size) {
            return doc;
        }
    }
}
