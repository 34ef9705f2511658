use std::rc::Rc;

use serde::Serialize;

use super::ast::Span;
use super::eval::{checked, Evaluator};
use super::value::{deep_equal, Func, Value};
use super::EvalError;
use crate::document::{DataNode, Map, Number};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FunctionSig {
    pub name: &'static str,
    pub min_arity: usize,
    pub max_arity: usize,
    /// Zero-based positions of arguments that must be functions.
    pub function_args: &'static [usize],
    /// When called with one argument fewer than `min_arity`, the context
    /// value is passed as the first argument.
    pub context_default: bool,
}

impl FunctionSig {
    pub fn arity_text(&self) -> String {
        if self.min_arity == self.max_arity {
            self.min_arity.to_string()
        } else {
            format!("{}-{}", self.min_arity, self.max_arity)
        }
    }

    /// Smallest argument count accepted at a call site.
    pub fn min_call_args(&self) -> usize {
        if self.context_default {
            self.min_arity - 1
        } else {
            self.min_arity
        }
    }
}

const fn sig(
    name: &'static str,
    min_arity: usize,
    max_arity: usize,
    function_args: &'static [usize],
    context_default: bool,
) -> FunctionSig {
    FunctionSig {
        name,
        min_arity,
        max_arity,
        function_args,
        context_default,
    }
}

static FUNCTIONS: [FunctionSig; 28] = [
    sig("$sum", 1, 1, &[], false),
    sig("$max", 1, 1, &[], false),
    sig("$min", 1, 1, &[], false),
    sig("$average", 1, 1, &[], false),
    sig("$count", 1, 1, &[], false),
    sig("$string", 1, 2, &[], true),
    sig("$number", 1, 1, &[], true),
    sig("$boolean", 1, 1, &[], true),
    sig("$not", 1, 1, &[], true),
    sig("$exists", 1, 1, &[], false),
    sig("$uppercase", 1, 1, &[], true),
    sig("$lowercase", 1, 1, &[], true),
    sig("$trim", 1, 1, &[], true),
    sig("$substring", 2, 3, &[], true),
    sig("$split", 2, 3, &[], true),
    sig("$join", 1, 2, &[], false),
    sig("$contains", 2, 2, &[], true),
    sig("$replace", 3, 4, &[], true),
    sig("$keys", 1, 1, &[], true),
    sig("$values", 1, 1, &[], true),
    sig("$merge", 1, 1, &[], false),
    sig("$append", 2, 2, &[], false),
    sig("$distinct", 1, 1, &[], false),
    sig("$sort", 1, 2, &[1], false),
    sig("$map", 2, 2, &[1], false),
    sig("$filter", 2, 2, &[1], false),
    sig("$reduce", 2, 3, &[1], false),
    sig("$each", 2, 2, &[1], false),
];

pub fn registered_functions() -> &'static [FunctionSig] {
    &FUNCTIONS
}

pub fn lookup_function(name: &str) -> Option<&'static FunctionSig> {
    FUNCTIONS.iter().find(|f| f.name == name)
}

fn type_err(span: Span, sig: &FunctionSig, message: impl std::fmt::Display) -> EvalError {
    EvalError::Type {
        span,
        message: format!("{}: {message}", sig.name),
    }
}

fn arg_err(span: Span, sig: &FunctionSig, message: impl std::fmt::Display) -> EvalError {
    EvalError::Argument {
        span,
        message: format!("{}: {message}", sig.name),
    }
}

fn string_arg<'v>(
    v: &'v Value<'_>,
    span: Span,
    sig: &FunctionSig,
    position: usize,
) -> Result<&'v str, EvalError> {
    v.as_str().ok_or_else(|| {
        type_err(
            span,
            sig,
            format!("argument {} must be a string, found {}", position + 1, v.type_name()),
        )
    })
}

fn int_arg(v: &Value<'_>, span: Span, sig: &FunctionSig, position: usize) -> Result<i64, EvalError> {
    v.as_number()
        .and_then(|n| n.floor().to_i64())
        .ok_or_else(|| {
            type_err(
                span,
                sig,
                format!("argument {} must be a number, found {}", position + 1, v.type_name()),
            )
        })
}

fn func_arg<'a>(v: &Value<'a>, span: Span, sig: &FunctionSig, position: usize) -> Result<Rc<Func<'a>>, EvalError> {
    match v {
        Value::Func(f) => Ok(f.clone()),
        other => Err(type_err(
            span,
            sig,
            format!("argument {} must be a function, found {}", position + 1, other.type_name()),
        )),
    }
}

fn numbers(v: &Value<'_>, span: Span, sig: &FunctionSig) -> Result<Vec<Number>, EvalError> {
    v.members()
        .iter()
        .map(|m| {
            m.as_number()
                .cloned()
                .ok_or_else(|| type_err(span, sig, format!("expects numbers, found {}", m.type_name())))
        })
        .collect()
}

/// Calls `f` with the leading arguments it can accept.
fn call_with<'a>(
    ev: &mut Evaluator<'a>,
    f: &Rc<Func<'a>>,
    mut args: Vec<Value<'a>>,
    span: Span,
) -> Result<Value<'a>, EvalError> {
    args.truncate(f.param_count());
    ev.apply(f, args, span)
}

/// Merge sort that takes from the right run exactly when `after(left, right)`
/// holds, which keeps equal members in input order.
fn merge_sort<'a>(
    items: Vec<Value<'a>>,
    after: &mut dyn FnMut(&Value<'a>, &Value<'a>) -> Result<bool, EvalError>,
) -> Result<Vec<Value<'a>>, EvalError> {
    if items.len() <= 1 {
        return Ok(items);
    }
    let mut left = items;
    let right = left.split_off(left.len() / 2);
    let left = merge_sort(left, after)?;
    let right = merge_sort(right, after)?;
    let mut out = Vec::with_capacity(left.len() + right.len());
    let (mut i, mut j) = (0, 0);
    while i < left.len() && j < right.len() {
        if after(&left[i], &right[j])? {
            out.push(right[j].clone());
            j += 1;
        } else {
            out.push(left[i].clone());
            i += 1;
        }
    }
    out.extend_from_slice(&left[i..]);
    out.extend_from_slice(&right[j..]);
    Ok(out)
}

pub(crate) fn call_builtin<'a>(
    ev: &mut Evaluator<'a>,
    sig: &'static FunctionSig,
    args: Vec<Value<'a>>,
    span: Span,
) -> Result<Value<'a>, EvalError> {
    let a0 = &args[0];
    let arg = |i: usize| args.get(i).cloned().unwrap_or(Value::Undefined);
    let name = sig.name;
    ev.charge(a0.members().len() as u64, span)?;

    // Functions other than these pass undefined input straight through.
    if a0.is_undefined() && !matches!(name, "$count" | "$exists" | "$append" | "$sum") {
        return Ok(Value::Undefined);
    }

    match name {
        "$sum" => {
            let mut total = Number::zero();
            for n in numbers(a0, span, sig)? {
                total = total.add(&n);
            }
            checked(total, span)
        }
        "$max" | "$min" => {
            let ns = numbers(a0, span, sig)?;
            let pick = ns.into_iter().reduce(|best, n| {
                let ord = n.numeric_cmp(&best);
                let better = if name == "$max" {
                    ord == std::cmp::Ordering::Greater
                } else {
                    ord == std::cmp::Ordering::Less
                };
                if better {
                    n
                } else {
                    best
                }
            });
            Ok(pick.map_or(Value::Undefined, Value::number))
        }
        "$average" => {
            let ns = numbers(a0, span, sig)?;
            if ns.is_empty() {
                return Ok(Value::Undefined);
            }
            let count = Number::from_u64(ns.len() as u64);
            let total = ns.iter().fold(Number::zero(), |acc, n| acc.add(n));
            let avg = total
                .div(&count)
                .map_err(|_| EvalError::NumberOutOfRange { span })?;
            checked(avg, span)
        }
        "$count" => Ok(Value::number(Number::from_u64(a0.members().len() as u64))),
        "$string" => {
            let pretty = arg(1).truthy();
            if matches!(a0, Value::Func(_)) {
                return Ok(Value::string(""));
            }
            if a0.as_str().is_some() {
                return Ok(a0.clone());
            }
            Ok(Value::string(a0.stringify(pretty)))
        }
        "$number" => match a0.node() {
            Some(DataNode::Number(_)) => Ok(a0.clone()),
            Some(DataNode::Bool(b)) => Ok(Value::number(Number::from_i64(i64::from(*b)))),
            Some(DataNode::String(s)) => Number::parse(s.trim())
                .map(Value::number)
                .map_err(|_| arg_err(span, sig, format!("cannot convert \"{s}\" to a number"))),
            _ => Err(type_err(span, sig, format!("cannot convert {} to a number", a0.type_name()))),
        },
        "$boolean" => Ok(Value::boolean(a0.truthy())),
        "$not" => Ok(Value::boolean(!a0.truthy())),
        "$exists" => Ok(Value::boolean(!a0.is_undefined())),
        "$uppercase" => Ok(Value::string(string_arg(a0, span, sig, 0)?.to_uppercase())),
        "$lowercase" => Ok(Value::string(string_arg(a0, span, sig, 0)?.to_lowercase())),
        "$trim" => {
            let s = string_arg(a0, span, sig, 0)?;
            Ok(Value::string(s.split_whitespace().collect::<Vec<_>>().join(" ")))
        }
        "$substring" => {
            let chars: Vec<char> = string_arg(a0, span, sig, 0)?.chars().collect();
            let len = chars.len() as i64;
            let mut start = int_arg(&arg(1), span, sig, 1)?;
            if start < 0 {
                start = (len + start).max(0);
            }
            let start = start.min(len);
            let end = match arg(2) {
                Value::Undefined => len,
                v => {
                    let n = int_arg(&v, span, sig, 2)?;
                    if n <= 0 {
                        start
                    } else {
                        start.saturating_add(n).min(len)
                    }
                }
            };
            Ok(Value::string(chars[start as usize..end as usize].iter().collect::<String>()))
        }
        "$split" => {
            let s = string_arg(a0, span, sig, 0)?;
            let sep = string_arg(&args[1], span, sig, 1)?;
            let limit = match arg(2) {
                Value::Undefined => usize::MAX,
                v => {
                    let n = int_arg(&v, span, sig, 2)?;
                    if n < 0 {
                        return Err(arg_err(span, sig, "limit must not be negative"));
                    }
                    n as usize
                }
            };
            let parts: Vec<Value<'a>> = if sep.is_empty() {
                s.chars().take(limit).map(|c| Value::string(c.to_string())).collect()
            } else {
                s.split(sep).take(limit).map(Value::string).collect()
            };
            Ok(Value::array(parts))
        }
        "$join" => {
            let sep = match arg(1) {
                Value::Undefined => String::new(),
                v => string_arg(&v, span, sig, 1)?.to_string(),
            };
            let mut parts = Vec::new();
            for m in a0.members() {
                parts.push(string_arg(&m, span, sig, 0)?.to_string());
            }
            Ok(Value::string(parts.join(&sep)))
        }
        "$contains" => {
            let s = string_arg(a0, span, sig, 0)?;
            let pat = string_arg(&args[1], span, sig, 1)?;
            Ok(Value::boolean(s.contains(pat)))
        }
        "$replace" => {
            let s = string_arg(a0, span, sig, 0)?;
            let pat = string_arg(&args[1], span, sig, 1)?;
            let rep = string_arg(&args[2], span, sig, 2)?;
            if pat.is_empty() {
                return Err(arg_err(span, sig, "pattern must not be empty"));
            }
            let out = match arg(3) {
                Value::Undefined => s.replace(pat, rep),
                v => {
                    let n = int_arg(&v, span, sig, 3)?;
                    if n < 0 {
                        return Err(arg_err(span, sig, "limit must not be negative"));
                    }
                    s.replacen(pat, rep, n as usize)
                }
            };
            Ok(Value::string(out))
        }
        "$keys" | "$values" => {
            let mut out: Vec<Value<'a>> = Vec::new();
            let mut seen: Vec<String> = Vec::new();
            for m in a0.members() {
                if let Some(DataNode::Object(map)) = m.node() {
                    for (k, v) in map {
                        if name == "$keys" {
                            if !seen.contains(k) {
                                seen.push(k.clone());
                                out.push(Value::string(k.as_str()));
                            }
                        } else {
                            out.push(Value::own(v.clone()));
                        }
                    }
                }
            }
            Ok(Value::sequence(out, false))
        }
        "$merge" => {
            let mut out = Map::new();
            for m in a0.members() {
                match m.node() {
                    Some(DataNode::Object(map)) => {
                        for (k, v) in map {
                            out.insert(k.clone(), v.clone());
                        }
                    }
                    _ => return Err(type_err(span, sig, format!("expects objects, found {}", m.type_name()))),
                }
            }
            Ok(Value::own(DataNode::Object(out)))
        }
        "$append" => {
            let b = arg(1);
            if a0.is_undefined() {
                return Ok(b);
            }
            if b.is_undefined() {
                return Ok(a0.clone());
            }
            let mut items = a0.members();
            items.extend(b.members());
            Ok(Value::array(items))
        }
        "$distinct" => {
            if !a0.is_array() {
                return Ok(a0.clone());
            }
            let mut out: Vec<Value<'a>> = Vec::new();
            for m in a0.members() {
                if !out.iter().any(|o| deep_equal(o, &m)) {
                    out.push(m);
                }
            }
            Ok(Value::array(out))
        }
        "$sort" => {
            let items = a0.members();
            let sorted = match arg(1) {
                Value::Undefined => {
                    let all_numbers = items.iter().all(|m| m.as_number().is_some());
                    let all_strings = items.iter().all(|m| m.as_str().is_some());
                    if !all_numbers && !all_strings {
                        return Err(type_err(
                            span,
                            sig,
                            "without a comparator all members must be numbers or all strings",
                        ));
                    }
                    merge_sort(items, &mut |l, r| {
                        Ok(match (l.as_number(), r.as_number()) {
                            (Some(x), Some(y)) => x.numeric_cmp(y) == std::cmp::Ordering::Greater,
                            _ => l.as_str() > r.as_str(),
                        })
                    })?
                }
                f => {
                    let f = func_arg(&f, span, sig, 1)?;
                    merge_sort(items, &mut |l, r| {
                        Ok(call_with(ev, &f, vec![l.clone(), r.clone()], span)?.truthy())
                    })?
                }
            };
            Ok(Value::array(sorted))
        }
        "$map" | "$filter" => {
            let f = func_arg(&args[1], span, sig, 1)?;
            let items = a0.members();
            let whole = Value::array(items.clone());
            let mut out = Vec::new();
            for (i, item) in items.into_iter().enumerate() {
                let index = Value::number(Number::from_u64(i as u64));
                let r = call_with(ev, &f, vec![item.clone(), index, whole.clone()], span)?;
                if name == "$map" {
                    if !r.is_undefined() {
                        out.push(r);
                    }
                } else if r.truthy() {
                    out.push(item);
                }
            }
            Ok(Value::sequence(out, false))
        }
        "$reduce" => {
            let f = func_arg(&args[1], span, sig, 1)?;
            if f.param_count() < 2 {
                return Err(arg_err(span, sig, "the reducer must take at least two parameters"));
            }
            let items = a0.members();
            let whole = Value::array(items.clone());
            let mut iter = items.into_iter().enumerate();
            let mut acc = match arg(2) {
                Value::Undefined => match iter.next() {
                    Some((_, first)) => first,
                    None => return Ok(Value::Undefined),
                },
                init => init,
            };
            for (i, item) in iter {
                let index = Value::number(Number::from_u64(i as u64));
                acc = call_with(ev, &f, vec![acc, item, index, whole.clone()], span)?;
            }
            Ok(acc)
        }
        "$each" => {
            let f = func_arg(&args[1], span, sig, 1)?;
            let Some(DataNode::Object(map)) = a0.node() else {
                return Err(type_err(span, sig, format!("expects an object, found {}", a0.type_name())));
            };
            let map = map.clone();
            let whole = a0.clone();
            let mut out = Vec::new();
            for (k, v) in map {
                let r = call_with(ev, &f, vec![Value::own(v), Value::string(k), whole.clone()], span)?;
                if !r.is_undefined() {
                    out.push(r);
                }
            }
            Ok(Value::sequence(out, false))
        }
        other => unreachable!("function table entry {other} has no implementation"),
    }
}
