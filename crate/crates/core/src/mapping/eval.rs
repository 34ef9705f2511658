use std::rc::Rc;

use indexmap::IndexMap;

use super::ast::{BinOp, Expr, ExprKind, MappingAst, Span};
use super::functions::{call_builtin, lookup_function};
use super::value::{deep_equal, Env, Func, SeqFlags, Value};
use super::EvalError;
use crate::document::{DataNode, Map, Number, NumberError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    /// Nested function calls allowed before evaluation aborts.
    pub max_depth: usize,
    /// Expression evaluations allowed before evaluation aborts.
    pub max_steps: u64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            max_depth: 256,
            max_steps: 10_000_000,
        }
    }
}

/// Evaluates `ast` against `input`. `None` means the expression produced no
/// value. The input is only read.
pub fn evaluate_mapping(ast: &MappingAst, input: &DataNode) -> Result<Option<DataNode>, EvalError> {
    evaluate_mapping_with(ast, input, EvalOptions::default())
}

pub fn evaluate_mapping_with(
    ast: &MappingAst,
    input: &DataNode,
    options: EvalOptions,
) -> Result<Option<DataNode>, EvalError> {
    let root = Value::Ref(input);
    let mut ev = Evaluator {
        root: root.clone(),
        steps: 0,
        depth: 0,
        options,
    };
    let env = Env::root();
    let out = ev.eval(&ast.root, &root, &env)?;
    Ok(out.into_node())
}

pub(crate) struct Evaluator<'a> {
    root: Value<'a>,
    steps: u64,
    depth: usize,
    options: EvalOptions,
}

fn num_err(e: NumberError, span: Span) -> EvalError {
    match e {
        NumberError::DivisionByZero => EvalError::DivisionByZero { span },
        _ => EvalError::NumberOutOfRange { span },
    }
}

pub(crate) fn checked<'a>(n: Number, span: Span) -> Result<Value<'a>, EvalError> {
    if n.in_range() {
        Ok(Value::number(n))
    } else {
        Err(EvalError::NumberOutOfRange { span })
    }
}

impl<'a> Evaluator<'a> {
    pub fn charge(&mut self, n: u64, span: Span) -> Result<(), EvalError> {
        self.steps += n;
        if self.steps > self.options.max_steps {
            return Err(EvalError::BudgetExhausted {
                span,
                limit: self.options.max_steps,
            });
        }
        Ok(())
    }

    pub fn eval(
        &mut self,
        expr: &'a Expr,
        ctx: &Value<'a>,
        env: &Rc<Env<'a>>,
    ) -> Result<Value<'a>, EvalError> {
        self.charge(1, expr.span)?;
        stacker::maybe_grow(64 * 1024, 2 * 1024 * 1024, || self.eval_inner(expr, ctx, env))
    }

    fn eval_inner(
        &mut self,
        expr: &'a Expr,
        ctx: &Value<'a>,
        env: &Rc<Env<'a>>,
    ) -> Result<Value<'a>, EvalError> {
        let span = expr.span;
        Ok(match &expr.kind {
            ExprKind::Str(s) => Value::string(s.as_str()),
            ExprKind::Num(n) => Value::number(n.clone()),
            ExprKind::Bool(b) => Value::boolean(*b),
            ExprKind::Null => Value::own(DataNode::Null),
            ExprKind::Name(name) => lookup(ctx, name),
            ExprKind::Var(name) => match name.as_str() {
                "" => ctx.clone(),
                "$" => self.root.clone(),
                _ => match env.lookup(name) {
                    Some(v) => v,
                    None => match lookup_function(&format!("${name}")) {
                        Some(sig) => Value::Func(Rc::new(Func::Builtin(sig))),
                        None => Value::Undefined,
                    },
                },
            },
            ExprKind::Wildcard => {
                let mut out = Vec::new();
                wildcard(ctx, &mut out);
                Value::sequence(out, false)
            }
            ExprKind::Descendants => {
                let mut out = Vec::new();
                descendants(ctx, &mut out);
                Value::sequence(out, false)
            }
            ExprKind::Path(steps) => self.path(steps, ctx, env)?,
            ExprKind::Filter { base, predicate } => {
                let items = self.eval(base, ctx, env)?.members();
                self.filter(items, predicate, env)?
            }
            ExprKind::KeepArray(inner) => match self.eval(inner, ctx, env)? {
                Value::Undefined => Value::Undefined,
                Value::Seq(items, flags) => Value::Seq(items, SeqFlags { keep: true, ..flags }),
                v if v.is_array() => v,
                v => Value::sequence(vec![v], true),
            },
            ExprKind::Array(items) => {
                let mut out = Vec::new();
                for item in items {
                    if let ExprKind::Range(lo, hi) = &item.kind {
                        self.range(lo, hi, ctx, env, &mut out)?;
                        continue;
                    }
                    match self.eval(item, ctx, env)? {
                        Value::Undefined => {}
                        v if v.is_cons() => out.push(v),
                        v if v.is_array() => out.extend(v.members()),
                        v => out.push(v),
                    }
                }
                Value::Seq(
                    Rc::new(out),
                    SeqFlags {
                        cons: true,
                        keep: true,
                    },
                )
            }
            ExprKind::Range(..) => {
                return Err(EvalError::Type {
                    span,
                    message: "a range is only allowed inside an array constructor".into(),
                })
            }
            ExprKind::Object(pairs) => {
                let items = match ctx {
                    v if v.is_array() => v.members(),
                    v => vec![v.clone()],
                };
                self.group(items, pairs, env)?
            }
            ExprKind::GroupBy { base, pairs } => {
                let items = self.eval(base, ctx, env)?.members();
                self.group(items, pairs, env)?
            }
            ExprKind::Neg(inner) => match self.eval(inner, ctx, env)? {
                Value::Undefined => Value::Undefined,
                v => match v.as_number() {
                    Some(n) => Value::number(n.neg()),
                    None => {
                        return Err(EvalError::Type {
                            span,
                            message: format!("cannot negate a {}", v.type_name()),
                        })
                    }
                },
            },
            ExprKind::Binary { op, lhs, rhs } => self.binary(*op, lhs, rhs, span, ctx, env)?,
            ExprKind::Condition {
                test,
                then,
                otherwise,
            } => {
                if self.eval(test, ctx, env)?.truthy() {
                    self.eval(then, ctx, env)?
                } else {
                    match otherwise {
                        Some(e) => self.eval(e, ctx, env)?,
                        None => Value::Undefined,
                    }
                }
            }
            ExprKind::Call { callee, args } => {
                let f = self.eval(callee, ctx, env)?;
                let Value::Func(f) = f else {
                    let name = match &callee.kind {
                        ExprKind::Var(v) => format!("${v}"),
                        _ => "callee".into(),
                    };
                    return Err(EvalError::NotCallable { span: callee.span, name });
                };
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.eval(a, ctx, env)?);
                }
                if let Func::Builtin(sig) = f.as_ref() {
                    if sig.context_default && values.len() + 1 == sig.min_arity {
                        values.insert(0, ctx.clone());
                    }
                }
                self.apply(&f, values, span)?
            }
            ExprKind::Block(items) => {
                let scope = Env::child(env);
                let mut last = Value::Undefined;
                for item in items {
                    last = self.eval(item, ctx, &scope)?;
                }
                last
            }
            ExprKind::Bind { name, value } => {
                let v = self.eval(value, ctx, env)?;
                env.bind(name, v.clone());
                v
            }
            ExprKind::Lambda { params, body } => Value::Func(Rc::new(Func::Lambda {
                params,
                body,
                env: env.clone(),
                ctx: ctx.clone(),
            })),
        })
    }

    /// Calls `f`. Lambdas receive as many arguments as they declare.
    pub fn apply(
        &mut self,
        f: &Rc<Func<'a>>,
        mut args: Vec<Value<'a>>,
        span: Span,
    ) -> Result<Value<'a>, EvalError> {
        match f.as_ref() {
            Func::Builtin(sig) => {
                if args.len() < sig.min_arity || args.len() > sig.max_arity {
                    return Err(EvalError::Argument {
                        span,
                        message: format!(
                            "{} takes {} argument(s), got {}",
                            sig.name,
                            sig.arity_text(),
                            args.len()
                        ),
                    });
                }
                call_builtin(self, sig, args, span)
            }
            Func::Lambda {
                params,
                body,
                env,
                ctx,
            } => {
                if self.depth >= self.options.max_depth {
                    return Err(EvalError::DepthExceeded {
                        span,
                        limit: self.options.max_depth,
                    });
                }
                let scope = Env::child(env);
                args.resize(params.len(), Value::Undefined);
                for (p, a) in params.iter().zip(args) {
                    scope.bind(p, a);
                }
                self.depth += 1;
                let out = self.eval(body, ctx, &scope);
                self.depth -= 1;
                out
            }
        }
    }

    fn path(
        &mut self,
        steps: &'a [Expr],
        ctx: &Value<'a>,
        env: &Rc<Env<'a>>,
    ) -> Result<Value<'a>, EvalError> {
        let keep = steps.iter().any(|s| matches!(s.kind, ExprKind::KeepArray(_)));
        let mut seq = self.eval(&steps[0], ctx, env)?.members();
        for (i, step) in steps.iter().enumerate().skip(1) {
            let mut results = Vec::new();
            for item in &seq {
                let r = self.eval(step, item, env)?;
                if !r.is_undefined() {
                    results.push(r);
                }
            }
            // A lone input array produced by the last step is returned whole.
            if i == steps.len() - 1
                && results.len() == 1
                && matches!(results[0].node(), Some(DataNode::Array(_)))
            {
                return Ok(results.pop().expect("one result"));
            }
            seq = if matches!(step.kind, ExprKind::Array(_)) {
                results
            } else {
                results.iter().flat_map(Value::members).collect()
            };
            if seq.is_empty() {
                break;
            }
        }
        Ok(Value::sequence(seq, keep))
    }

    fn filter(
        &mut self,
        items: Vec<Value<'a>>,
        predicate: &'a Expr,
        env: &Rc<Env<'a>>,
    ) -> Result<Value<'a>, EvalError> {
        let len = items.len() as i64;
        let index_of = |n: &Number| -> Option<i64> {
            let i = n.floor().to_i64()?;
            Some(if i < 0 { len + i } else { i })
        };
        if let ExprKind::Num(n) = &predicate.kind {
            let picked = index_of(n)
                .filter(|i| (0..len).contains(i))
                .map(|i| items[i as usize].clone());
            return Ok(Value::sequence(picked.into_iter().collect(), false));
        }
        let mut out = Vec::new();
        for (i, item) in items.iter().enumerate() {
            let r = self.eval(predicate, item, env)?;
            let selected = if let Some(n) = r.as_number() {
                index_of(n) == Some(i as i64)
            } else if r.is_array() && !r.members().is_empty()
                && r.members().iter().all(|m| m.as_number().is_some())
            {
                r.members()
                    .iter()
                    .any(|m| index_of(m.as_number().expect("checked")) == Some(i as i64))
            } else {
                r.truthy()
            };
            if selected {
                out.push(item.clone());
            }
        }
        Ok(Value::sequence(out, false))
    }

    fn range(
        &mut self,
        lo: &'a Expr,
        hi: &'a Expr,
        ctx: &Value<'a>,
        env: &Rc<Env<'a>>,
        out: &mut Vec<Value<'a>>,
    ) -> Result<(), EvalError> {
        let a = self.eval(lo, ctx, env)?;
        let b = self.eval(hi, ctx, env)?;
        if a.is_undefined() || b.is_undefined() {
            return Ok(());
        }
        let bound = |v: &Value<'_>, e: &Expr| -> Result<i64, EvalError> {
            v.as_number()
                .filter(|n| n.is_integral())
                .and_then(Number::to_i64)
                .ok_or_else(|| EvalError::Type {
                    span: e.span,
                    message: format!("range bounds must be integers, found {}", v.type_name()),
                })
        };
        let (a, b) = (bound(&a, lo)?, bound(&b, hi)?);
        if a > b {
            return Ok(());
        }
        let count = (b as i128 - a as i128 + 1) as u64;
        self.charge(count, lo.span.to(hi.span))?;
        out.extend((a..=b).map(|i| Value::number(Number::from_i64(i))));
        Ok(())
    }

    fn group(
        &mut self,
        mut items: Vec<Value<'a>>,
        pairs: &'a [(Expr, Expr)],
        env: &Rc<Env<'a>>,
    ) -> Result<Value<'a>, EvalError> {
        if items.is_empty() {
            items.push(Value::Undefined);
        }
        let mut groups: IndexMap<String, (Vec<Value<'a>>, usize)> = IndexMap::new();
        for item in &items {
            for (pi, (key_expr, _)) in pairs.iter().enumerate() {
                let key = match self.eval(key_expr, item, env)? {
                    Value::Undefined => continue,
                    k => match k.as_str() {
                        Some(s) => s.to_string(),
                        None => {
                            return Err(EvalError::Type {
                                span: key_expr.span,
                                message: format!("object key must be a string, found {}", k.type_name()),
                            })
                        }
                    },
                };
                match groups.get_mut(&key) {
                    Some((_, owner)) if *owner != pi => {
                        return Err(EvalError::DuplicateKey {
                            span: key_expr.span,
                            key,
                        })
                    }
                    Some((members, _)) => members.push(item.clone()),
                    None => {
                        groups.insert(key, (vec![item.clone()], pi));
                    }
                }
            }
        }
        let mut out = Map::with_capacity(groups.len());
        for (key, (members, pi)) in groups {
            let group_ctx = Value::sequence(members, false);
            let value_expr = &pairs[pi].1;
            match self.eval(value_expr, &group_ctx, env)? {
                Value::Undefined => {}
                Value::Func(_) => {
                    return Err(EvalError::Type {
                        span: value_expr.span,
                        message: "functions cannot be stored in objects".into(),
                    })
                }
                v => {
                    out.insert(key, v.into_node().expect("defined, non-function value"));
                }
            }
        }
        Ok(Value::own(DataNode::Object(out)))
    }

    fn binary(
        &mut self,
        op: BinOp,
        lhs: &'a Expr,
        rhs: &'a Expr,
        span: Span,
        ctx: &Value<'a>,
        env: &Rc<Env<'a>>,
    ) -> Result<Value<'a>, EvalError> {
        match op {
            BinOp::And => {
                let l = self.eval(lhs, ctx, env)?.truthy();
                return Ok(Value::boolean(l && self.eval(rhs, ctx, env)?.truthy()));
            }
            BinOp::Or => {
                let l = self.eval(lhs, ctx, env)?.truthy();
                return Ok(Value::boolean(l || self.eval(rhs, ctx, env)?.truthy()));
            }
            _ => {}
        }
        let l = self.eval(lhs, ctx, env)?;
        let r = self.eval(rhs, ctx, env)?;
        match op {
            BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Mod => {
                if l.is_undefined() || r.is_undefined() {
                    return Ok(Value::Undefined);
                }
                let operand = |v: &Value<'a>, e: &Expr| -> Result<Number, EvalError> {
                    v.as_number().cloned().ok_or_else(|| EvalError::Type {
                        span: e.span,
                        message: format!("`{}` expects numbers, found {}", op.symbol(), v.type_name()),
                    })
                };
                let (a, b) = (operand(&l, lhs)?, operand(&r, rhs)?);
                let n = match op {
                    BinOp::Add => a.add(&b),
                    BinOp::Sub => a.sub(&b),
                    BinOp::Mul => a.mul(&b),
                    BinOp::Div => a.div(&b).map_err(|e| num_err(e, span))?,
                    _ => a.rem(&b).map_err(|e| num_err(e, span))?,
                };
                checked(n, span)
            }
            BinOp::Concat => Ok(Value::string(l.stringify(false) + &r.stringify(false))),
            BinOp::Eq | BinOp::Ne => {
                if l.is_undefined() || r.is_undefined() {
                    return Ok(Value::boolean(false));
                }
                let eq = deep_equal(&l, &r);
                Ok(Value::boolean(if op == BinOp::Eq { eq } else { !eq }))
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => {
                if l.is_undefined() || r.is_undefined() {
                    return Ok(Value::boolean(false));
                }
                let ord = match (l.node(), r.node()) {
                    (Some(DataNode::Number(a)), Some(DataNode::Number(b))) => a.numeric_cmp(b),
                    (Some(DataNode::String(a)), Some(DataNode::String(b))) => a.cmp(b),
                    _ => {
                        return Err(EvalError::Type {
                            span,
                            message: format!(
                                "`{}` compares two numbers or two strings, found {} and {}",
                                op.symbol(),
                                l.type_name(),
                                r.type_name()
                            ),
                        })
                    }
                };
                use std::cmp::Ordering::*;
                let result = match op {
                    BinOp::Lt => ord == Less,
                    BinOp::Le => ord != Greater,
                    BinOp::Gt => ord == Greater,
                    _ => ord != Less,
                };
                Ok(Value::boolean(result))
            }
            BinOp::In => {
                if l.is_undefined() {
                    return Ok(Value::boolean(false));
                }
                Ok(Value::boolean(r.members().iter().any(|m| deep_equal(&l, m))))
            }
            BinOp::And | BinOp::Or => unreachable!("handled above"),
        }
    }
}

fn lookup<'a>(ctx: &Value<'a>, name: &str) -> Value<'a> {
    match ctx {
        Value::Ref(DataNode::Object(m)) => m.get(name).map_or(Value::Undefined, Value::Ref),
        Value::Own(node) => match node.as_ref() {
            DataNode::Object(m) => m
                .get(name)
                .map_or(Value::Undefined, |v| Value::own(v.clone())),
            DataNode::Array(_) => lookup_each(ctx, name),
            _ => Value::Undefined,
        },
        Value::Ref(DataNode::Array(_)) | Value::Seq(..) => lookup_each(ctx, name),
        _ => Value::Undefined,
    }
}

fn lookup_each<'a>(ctx: &Value<'a>, name: &str) -> Value<'a> {
    let mut out = Vec::new();
    for item in ctx.members() {
        let r = lookup(&item, name);
        if r.is_array() {
            out.extend(r.members());
        } else if !r.is_undefined() {
            out.push(r);
        }
    }
    Value::sequence(out, false)
}

fn push_flat<'a>(v: Value<'a>, out: &mut Vec<Value<'a>>) {
    if v.is_array() {
        out.extend(v.members());
    } else {
        out.push(v);
    }
}

fn wildcard<'a>(ctx: &Value<'a>, out: &mut Vec<Value<'a>>) {
    match ctx {
        Value::Ref(DataNode::Object(m)) => m.values().for_each(|v| push_flat(Value::Ref(v), out)),
        Value::Own(node) if matches!(node.as_ref(), DataNode::Object(_)) => {
            if let DataNode::Object(m) = node.as_ref() {
                m.values().for_each(|v| push_flat(Value::own(v.clone()), out));
            }
        }
        v if v.is_array() => v.members().iter().for_each(|m| wildcard(m, out)),
        _ => {}
    }
}

fn descendants<'a>(ctx: &Value<'a>, out: &mut Vec<Value<'a>>) {
    if ctx.is_undefined() {
        return;
    }
    if ctx.is_array() {
        ctx.members().iter().for_each(|m| descendants(m, out));
        return;
    }
    out.push(ctx.clone());
    match ctx {
        Value::Ref(DataNode::Object(m)) => m.values().for_each(|v| descendants(&Value::Ref(v), out)),
        Value::Own(node) => {
            if let DataNode::Object(m) = node.as_ref() {
                m.values().for_each(|v| descendants(&Value::own(v.clone()), out));
            }
        }
        _ => {}
    }
}
