use std::collections::HashSet;

use super::ast::{Expr, ExprKind};
use super::functions::lookup_function;
use super::parser::parse_mapping;
use super::{Diagnostic, SyntaxReport};

/// Parses `source` and checks every call of a registered function for
/// arity. Names bound with `:=` or as lambda parameters may be called freely.
/// Nothing is evaluated.
pub fn validate_syntax(source: &str) -> SyntaxReport {
    let ast = match parse_mapping(source) {
        Ok(ast) => ast,
        Err(e) => return SyntaxReport::from_diagnostics(vec![Diagnostic::new(source, e.span, e.message)]),
    };
    let mut bound = HashSet::new();
    collect_bindings(&ast.root, &mut bound);
    let mut out = Vec::new();
    check(&ast.root, &bound, source, &mut out);
    SyntaxReport::from_diagnostics(out)
}

fn collect_bindings<'e>(expr: &'e Expr, bound: &mut HashSet<&'e str>) {
    match &expr.kind {
        ExprKind::Bind { name, .. } => {
            bound.insert(name);
        }
        ExprKind::Lambda { params, .. } => bound.extend(params.iter().map(String::as_str)),
        _ => {}
    }
    for child in expr.children() {
        collect_bindings(child, bound);
    }
}

fn check(expr: &Expr, bound: &HashSet<&str>, source: &str, out: &mut Vec<Diagnostic>) {
    if let ExprKind::Call { callee, args } = &expr.kind {
        if let ExprKind::Var(name) = &callee.kind {
            if !name.is_empty() && name != "$" && !bound.contains(name.as_str()) {
                match lookup_function(&format!("${name}")) {
                    None => out.push(Diagnostic::new(
                        source,
                        callee.span,
                        format!("unknown function `${name}`"),
                    )),
                    Some(sig) => {
                        if args.len() < sig.min_call_args() || args.len() > sig.max_arity {
                            out.push(Diagnostic::new(
                                source,
                                expr.span,
                                format!(
                                    "{} takes {} argument(s), got {}",
                                    sig.name,
                                    sig.arity_text(),
                                    args.len()
                                ),
                            ));
                        }
                        for &i in sig.function_args {
                            if let Some(a) = args.get(i) {
                                if is_literal(a) {
                                    out.push(Diagnostic::new(
                                        source,
                                        a.span,
                                        format!("argument {} of {} must be a function", i + 1, sig.name),
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    for child in expr.children() {
        check(child, bound, source, out);
    }
}

fn is_literal(e: &Expr) -> bool {
    matches!(
        e.kind,
        ExprKind::Str(_)
            | ExprKind::Num(_)
            | ExprKind::Bool(_)
            | ExprKind::Null
            | ExprKind::Array(_)
            | ExprKind::Object(_)
    )
}
