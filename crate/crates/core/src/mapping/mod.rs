//! Mapping expressions: a JSONata-compatible subset.
//!
//! Supported: paths, predicates (filter or index), `*`, `**`, object and
//! array constructors, group-by `expr{...}`, literals, arithmetic,
//! comparison, `and`/`or`, `in`, `&`, `..` ranges, `? :`, blocks with
//! `$x := value` bindings, lambdas and the functions listed by
//! [`registered_functions`]. Not supported: regex literals, `@`/`#` bindings,
//! `^( )` sorting, `%` parent steps, `~>` chaining and partial application.
//!
//! Numbers are decimals. `+ - * %` keep integers exact, `/` always yields a
//! decimal rounded to 34 significant digits.

mod ast;
mod eval;
mod functions;
mod lexer;
mod parser;
mod validate;
mod value;

pub use self::ast::{pretty, BinOp, Expr, ExprKind, MappingAst, Span};
pub use self::eval::{evaluate_mapping, evaluate_mapping_with, EvalOptions};
pub use self::functions::{lookup_function, registered_functions, FunctionSig};
pub use self::parser::parse_mapping;
pub use self::validate::validate_syntax;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: Span,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(span: Span, message: impl Into<String>) -> Self {
        ParseError {
            span,
            message: message.into(),
        }
    }

    pub fn render(&self, source: &str) -> String {
        let (line, col) = self.span.line_col(source);
        format!("{line}:{col} {}", self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("type error at {span}: {message}")]
    Type { span: Span, message: String },
    #[error("division by zero at {span}")]
    DivisionByZero { span: Span },
    #[error("number out of range at {span}")]
    NumberOutOfRange { span: Span },
    #[error("invalid argument at {span}: {message}")]
    Argument { span: Span, message: String },
    #[error("duplicate key `{key}` in object constructor at {span}")]
    DuplicateKey { span: Span, key: String },
    #[error("{name} is not a function ({span})")]
    NotCallable { span: Span, name: String },
    #[error("recursion deeper than {limit} calls at {span}")]
    DepthExceeded { span: Span, limit: usize },
    #[error("evaluation exceeded {limit} steps at {span}")]
    BudgetExhausted { span: Span, limit: u64 },
}

impl EvalError {
    pub fn span(&self) -> Span {
        match self {
            EvalError::Type { span, .. }
            | EvalError::DivisionByZero { span }
            | EvalError::NumberOutOfRange { span }
            | EvalError::Argument { span, .. }
            | EvalError::DuplicateKey { span, .. }
            | EvalError::NotCallable { span, .. }
            | EvalError::DepthExceeded { span, .. }
            | EvalError::BudgetExhausted { span, .. } => *span,
        }
    }

    /// The error text without its position.
    pub fn message(&self) -> String {
        match self {
            EvalError::Type { message, .. } => format!("type error: {message}"),
            EvalError::DivisionByZero { .. } => "division by zero".into(),
            EvalError::NumberOutOfRange { .. } => "number out of range".into(),
            EvalError::Argument { message, .. } => format!("invalid argument: {message}"),
            EvalError::DuplicateKey { key, .. } => {
                format!("duplicate key `{key}` in object constructor")
            }
            EvalError::NotCallable { name, .. } => format!("{name} is not a function"),
            EvalError::DepthExceeded { limit, .. } => format!("recursion deeper than {limit} calls"),
            EvalError::BudgetExhausted { limit, .. } => format!("evaluation exceeded {limit} steps"),
        }
    }

    /// `line:col message`, the position taken from `source`.
    pub fn render(&self, source: &str) -> String {
        let (line, col) = self.span().line_col(source);
        format!("{line}:{col} {}", self.message())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub span: Span,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl Diagnostic {
    pub(crate) fn new(source: &str, span: Span, message: impl Into<String>) -> Self {
        let (line, column) = span.line_col(source);
        Diagnostic {
            span,
            line,
            column,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{} {}", self.line, self.column, self.message)
    }
}

/// Outcome of [`validate_syntax`]. `valid` is true exactly when there are no
/// diagnostics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntaxReport {
    pub valid: bool,
    pub diagnostics: Vec<Diagnostic>,
}

impl SyntaxReport {
    pub(crate) fn from_diagnostics(diagnostics: Vec<Diagnostic>) -> Self {
        SyntaxReport {
            valid: diagnostics.is_empty(),
            diagnostics,
        }
    }
}

impl std::fmt::Display for SyntaxReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.valid {
            return f.write_str("valid");
        }
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}
