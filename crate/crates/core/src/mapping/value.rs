//! Runtime values. Input nodes are borrowed; constructed nodes are shared
//! behind `Rc`. Sequences are produced by path steps and constructors.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use super::ast::Expr;
use super::functions::FunctionSig;
use crate::document::{serialize_json, to_pretty_json, DataNode, Number};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct SeqFlags {
    /// Built by an array constructor: kept whole when nested in another one.
    pub cons: bool,
    /// Stays an array even with a single member.
    pub keep: bool,
}

#[derive(Clone)]
pub(crate) enum Value<'a> {
    Undefined,
    Ref(&'a DataNode),
    Own(Rc<DataNode>),
    /// Members are never `Undefined`.
    Seq(Rc<Vec<Value<'a>>>, SeqFlags),
    Func(Rc<Func<'a>>),
}

pub(crate) enum Func<'a> {
    Builtin(&'static FunctionSig),
    Lambda {
        params: &'a [String],
        body: &'a Expr,
        env: Rc<Env<'a>>,
        ctx: Value<'a>,
    },
}

impl Func<'_> {
    pub fn param_count(&self) -> usize {
        match self {
            Func::Builtin(sig) => sig.min_arity.max(1),
            Func::Lambda { params, .. } => params.len(),
        }
    }
}

pub(crate) struct Env<'a> {
    vars: RefCell<HashMap<String, Value<'a>>>,
    parent: Option<Rc<Env<'a>>>,
}

impl<'a> Env<'a> {
    pub fn root() -> Rc<Self> {
        Rc::new(Env {
            vars: RefCell::new(HashMap::new()),
            parent: None,
        })
    }

    pub fn child(parent: &Rc<Env<'a>>) -> Rc<Self> {
        Rc::new(Env {
            vars: RefCell::new(HashMap::new()),
            parent: Some(parent.clone()),
        })
    }

    pub fn bind(&self, name: &str, value: Value<'a>) {
        self.vars.borrow_mut().insert(name.to_string(), value);
    }

    pub fn lookup(&self, name: &str) -> Option<Value<'a>> {
        if let Some(v) = self.vars.borrow().get(name) {
            return Some(v.clone());
        }
        self.parent.as_ref().and_then(|p| p.lookup(name))
    }
}

impl<'a> Value<'a> {
    pub fn own(node: DataNode) -> Self {
        Value::Own(Rc::new(node))
    }

    pub fn number(n: Number) -> Self {
        Value::own(DataNode::Number(n))
    }

    pub fn string(s: impl Into<String>) -> Self {
        Value::own(DataNode::String(s.into()))
    }

    pub fn boolean(b: bool) -> Self {
        Value::own(DataNode::Bool(b))
    }

    /// A constructed array value (always an array, even when short).
    pub fn array(items: Vec<Value<'a>>) -> Self {
        Value::Seq(
            Rc::new(items),
            SeqFlags {
                cons: false,
                keep: true,
            },
        )
    }

    /// Normalizes a result sequence: nothing is undefined, one member
    /// stands for itself unless `keep` is set.
    pub fn sequence(mut items: Vec<Value<'a>>, keep: bool) -> Self {
        match items.len() {
            0 => Value::Undefined,
            1 if !keep => items.pop().expect("one member"),
            _ => Value::Seq(Rc::new(items), SeqFlags { cons: false, keep }),
        }
    }

    pub fn is_undefined(&self) -> bool {
        matches!(self, Value::Undefined)
    }

    pub fn node(&self) -> Option<&DataNode> {
        match self {
            Value::Ref(n) => Some(n),
            Value::Own(n) => Some(n),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<&Number> {
        self.node().and_then(DataNode::as_number)
    }

    pub fn as_str(&self) -> Option<&str> {
        self.node().and_then(DataNode::as_str)
    }

    pub fn is_array(&self) -> bool {
        matches!(self, Value::Seq(..)) || matches!(self.node(), Some(DataNode::Array(_)))
    }

    pub fn is_cons(&self) -> bool {
        matches!(self, Value::Seq(_, flags) if flags.cons)
    }

    /// Members when viewed as a sequence: arrays explode, undefined is empty,
    /// anything else is a single member.
    pub fn members(&self) -> Vec<Value<'a>> {
        match self {
            Value::Undefined => Vec::new(),
            Value::Seq(items, _) => items.as_ref().clone(),
            Value::Ref(DataNode::Array(items)) => items.iter().map(Value::Ref).collect(),
            Value::Own(node) => match node.as_ref() {
                DataNode::Array(items) => items.iter().cloned().map(Value::own).collect(),
                _ => vec![self.clone()],
            },
            other => vec![other.clone()],
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Undefined => "undefined",
            Value::Seq(..) => "array",
            Value::Func(_) => "function",
            Value::Ref(n) => n.kind().name(),
            Value::Own(n) => n.kind().name(),
        }
    }

    /// Materializes into a plain node; functions and undefined have none.
    pub fn into_node(self) -> Option<DataNode> {
        match self {
            Value::Undefined | Value::Func(_) => None,
            Value::Ref(n) => Some(n.clone()),
            Value::Own(rc) => Some(Rc::try_unwrap(rc).unwrap_or_else(|rc| (*rc).clone())),
            Value::Seq(items, _) => {
                let items = Rc::try_unwrap(items).unwrap_or_else(|rc| (*rc).clone());
                Some(DataNode::Array(
                    items.into_iter().filter_map(Value::into_node).collect(),
                ))
            }
        }
    }

    pub fn to_node(&self) -> Option<DataNode> {
        self.clone().into_node()
    }

    /// Boolean cast: empty strings, zero, null, empty arrays and objects and
    /// undefined are false.
    pub fn truthy(&self) -> bool {
        match self {
            Value::Undefined => false,
            Value::Func(_) => true,
            Value::Seq(items, _) => items.iter().any(Value::truthy),
            Value::Ref(n) => node_truthy(n),
            Value::Own(n) => node_truthy(n),
        }
    }

    /// String cast used by `&` and `$string`.
    pub fn stringify(&self, pretty: bool) -> String {
        match self {
            Value::Undefined | Value::Func(_) => String::new(),
            _ => match self.node() {
                Some(DataNode::String(s)) => s.clone(),
                Some(DataNode::Number(n)) => n.to_plain_string(),
                _ => {
                    let node = self.to_node().unwrap_or(DataNode::Null);
                    if pretty {
                        to_pretty_json(&node)
                    } else {
                        serialize_json(&node, true)
                    }
                }
            },
        }
    }
}

fn node_truthy(node: &DataNode) -> bool {
    match node {
        DataNode::Null => false,
        DataNode::Bool(b) => *b,
        DataNode::Number(n) => !n.is_zero(),
        DataNode::String(s) => !s.is_empty(),
        DataNode::Array(items) => items.iter().any(node_truthy),
        DataNode::Object(m) => !m.is_empty(),
    }
}

/// Deep equality with numbers compared by value; mismatched types are
/// unequal.
pub(crate) fn deep_equal<'a>(a: &Value<'a>, b: &Value<'a>) -> bool {
    match (a, b) {
        (Value::Func(x), Value::Func(y)) => Rc::ptr_eq(x, y),
        (Value::Func(_), _) | (_, Value::Func(_)) => false,
        _ => match (a.node(), b.node()) {
            (Some(x), Some(y)) => x.value_eq(y),
            _ => match (a.to_node(), b.to_node()) {
                (Some(x), Some(y)) => x.value_eq(&y),
                _ => false,
            },
        },
    }
}
