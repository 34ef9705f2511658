use std::fmt;

use serde::{Deserialize, Serialize};

use crate::document::{serialize_json, DataNode, Number};

/// Byte range in the expression source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Span {
    pub offset: usize,
    pub len: usize,
}

impl Span {
    pub fn new(offset: usize, len: usize) -> Self {
        Span { offset, len }
    }

    pub fn end(&self) -> usize {
        self.offset + self.len
    }

    /// Smallest span covering both.
    pub fn to(self, other: Span) -> Span {
        let start = self.offset.min(other.offset);
        let end = self.end().max(other.end());
        Span::new(start, end - start)
    }

    pub fn contains(&self, inner: Span) -> bool {
        inner.offset >= self.offset && inner.end() <= self.end()
    }

    /// 1-based line and column (in characters) of the span start.
    pub fn line_col(&self, source: &str) -> (usize, usize) {
        let upto = &source[..self.offset.min(source.len())];
        let line = upto.matches('\n').count() + 1;
        let col = match upto.rfind('\n') {
            Some(i) => upto[i + 1..].chars().count() + 1,
            None => upto.chars().count() + 1,
        };
        (line, col)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "offset {}", self.offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Concat,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    In,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Concat => "&",
            BinOp::Eq => "=",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::In => "in",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }
}

/// Expression node. Equality is structural and ignores spans.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Str(String),
    Num(Number),
    Bool(bool),
    Null,
    /// Field lookup step.
    Name(String),
    /// `$name`; the empty name is the context `$`, `"$"` is the root `$$`.
    Var(String),
    Wildcard,
    Descendants,
    Path(Vec<Expr>),
    Filter {
        base: Box<Expr>,
        predicate: Box<Expr>,
    },
    /// `expr[]`: keep a singleton result as an array.
    KeepArray(Box<Expr>),
    Array(Vec<Expr>),
    /// `lo..hi`, only inside an array constructor.
    Range(Box<Expr>, Box<Expr>),
    Object(Vec<(Expr, Expr)>),
    GroupBy {
        base: Box<Expr>,
        pairs: Vec<(Expr, Expr)>,
    },
    Neg(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Condition {
        test: Box<Expr>,
        then: Box<Expr>,
        otherwise: Option<Box<Expr>>,
    },
    Call {
        callee: Box<Expr>,
        args: Vec<Expr>,
    },
    Block(Vec<Expr>),
    Bind {
        name: String,
        value: Box<Expr>,
    },
    Lambda {
        params: Vec<String>,
        body: Box<Expr>,
    },
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Expr { kind, span }
    }

    /// Direct children in source order.
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Str(_)
            | ExprKind::Num(_)
            | ExprKind::Bool(_)
            | ExprKind::Null
            | ExprKind::Name(_)
            | ExprKind::Var(_)
            | ExprKind::Wildcard
            | ExprKind::Descendants => Vec::new(),
            ExprKind::Path(steps) | ExprKind::Array(steps) | ExprKind::Block(steps) => {
                steps.iter().collect()
            }
            ExprKind::Filter { base, predicate } => vec![base, predicate],
            ExprKind::KeepArray(e) | ExprKind::Neg(e) => vec![e],
            ExprKind::Range(a, b) => vec![a, b],
            ExprKind::Object(pairs) => pairs.iter().flat_map(|(k, v)| [k, v]).collect(),
            ExprKind::GroupBy { base, pairs } => {
                let mut out: Vec<&Expr> = vec![base];
                out.extend(pairs.iter().flat_map(|(k, v)| [k, v]));
                out
            }
            ExprKind::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            ExprKind::Condition {
                test,
                then,
                otherwise,
            } => {
                let mut out: Vec<&Expr> = vec![test, then];
                out.extend(otherwise.as_deref());
                out
            }
            ExprKind::Call { callee, args } => {
                let mut out: Vec<&Expr> = vec![callee];
                out.extend(args.iter());
                out
            }
            ExprKind::Bind { value, .. } => vec![value],
            ExprKind::Lambda { body, .. } => vec![body],
        }
    }
}

/// Parsed mapping expression.
#[derive(Debug, Clone, PartialEq)]
pub struct MappingAst {
    pub root: Expr,
}

impl fmt::Display for MappingAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty(&self.root))
    }
}

const KEYWORDS: [&str; 7] = ["and", "or", "in", "true", "false", "null", "function"];

pub(crate) fn is_plain_name(name: &str) -> bool {
    let mut chars = name.chars();
    let first_ok = chars
        .next()
        .is_some_and(|c| c.is_alphabetic() || c == '_');
    first_ok && chars.all(|c| c.is_alphanumeric() || c == '_') && !KEYWORDS.contains(&name)
}

fn write_name(out: &mut String, name: &str) {
    if is_plain_name(name) {
        out.push_str(name);
    } else {
        out.push('`');
        out.push_str(name);
        out.push('`');
    }
}

/// Source text that parses back to a structurally equal tree.
pub fn pretty(expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, expr);
    out
}

fn write_pairs(out: &mut String, pairs: &[(Expr, Expr)]) {
    out.push('{');
    for (i, (k, v)) in pairs.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_expr(out, k);
        out.push_str(": ");
        write_expr(out, v);
    }
    out.push('}');
}

fn write_list(out: &mut String, items: &[Expr], sep: &str) {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(sep);
        }
        write_expr(out, item);
    }
}

fn write_expr(out: &mut String, expr: &Expr) {
    match &expr.kind {
        ExprKind::Str(s) => out.push_str(&serialize_json(&DataNode::String(s.clone()), true)),
        ExprKind::Num(n) => out.push_str(n.as_str()),
        ExprKind::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ExprKind::Null => out.push_str("null"),
        ExprKind::Name(n) => write_name(out, n),
        ExprKind::Var(v) => {
            out.push('$');
            out.push_str(v);
        }
        ExprKind::Wildcard => out.push('*'),
        ExprKind::Descendants => out.push_str("**"),
        ExprKind::Path(steps) => {
            for (i, step) in steps.iter().enumerate() {
                if i > 0 {
                    // A numeric step after a dot would lex as a decimal point.
                    let numeric = matches!(step.kind, ExprKind::Num(_));
                    out.push_str(if numeric { " . " } else { "." });
                }
                write_expr(out, step);
            }
        }
        ExprKind::Filter { base, predicate } => {
            write_expr(out, base);
            out.push('[');
            write_expr(out, predicate);
            out.push(']');
        }
        ExprKind::KeepArray(base) => {
            write_expr(out, base);
            out.push_str("[]");
        }
        ExprKind::Array(items) => {
            out.push('[');
            write_list(out, items, ", ");
            out.push(']');
        }
        ExprKind::Range(lo, hi) => {
            write_expr(out, lo);
            out.push_str(" .. ");
            write_expr(out, hi);
        }
        ExprKind::Object(pairs) => write_pairs(out, pairs),
        ExprKind::GroupBy { base, pairs } => {
            write_expr(out, base);
            write_pairs(out, pairs);
        }
        ExprKind::Neg(e) => {
            out.push('-');
            write_expr(out, e);
        }
        ExprKind::Binary { op, lhs, rhs } => {
            write_expr(out, lhs);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr(out, rhs);
        }
        ExprKind::Condition {
            test,
            then,
            otherwise,
        } => {
            write_expr(out, test);
            out.push_str(" ? ");
            write_expr(out, then);
            if let Some(e) = otherwise {
                out.push_str(" : ");
                write_expr(out, e);
            }
        }
        ExprKind::Call { callee, args } => {
            write_expr(out, callee);
            out.push('(');
            write_list(out, args, ", ");
            out.push(')');
        }
        ExprKind::Block(items) => {
            out.push('(');
            write_list(out, items, "; ");
            out.push(')');
        }
        ExprKind::Bind { name, value } => {
            out.push('$');
            out.push_str(name);
            out.push_str(" := ");
            write_expr(out, value);
        }
        ExprKind::Lambda { params, body } => {
            out.push_str("function(");
            for (i, p) in params.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push('$');
                out.push_str(p);
            }
            out.push_str(") {");
            write_expr(out, body);
            out.push('}');
        }
    }
}
